#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/pmf.hpp"
#include "bratteli/rng.hpp"

namespace bratteli {

// Opaque vertex token, interpreted by the source that produced it.
// Table-backed levels use a single ordinal; string-backed levels carry the
// whole level-0 symbol string (length beta^level).
using Vertex = std::vector<std::int32_t>;

// Pushes a PMF one level down: each level-(n+1) vertex spreads its mass
// uniformly over its incoming edges. Linear in lambda.
Pmf transport(const Diagram& d, const Pmf& lambda);

// A consistent family of per-level PMFs, either held as explicit tables or
// evaluated pointwise (log2 probability, sampler, decomposition descent).
class Source {
 public:
  virtual ~Source() = default;

  virtual int beta() const = 0;
  // Deepest level the source can evaluate.
  virtual int max_level() const = 0;
  // log2 of the level-n probability of v; -inf outside the support.
  virtual double log2_prob(int level, const Vertex& v) const = 0;
  // Draws a level-n vertex from mu_n.
  virtual Vertex sample(int level, Rng& rng) const = 0;
  // Child `digit` of v's decomposition, a level-(n-1) vertex.
  virtual Vertex child(int level, const Vertex& v, int digit) const = 0;

  virtual bool has_tables() const { return false; }
  virtual const Pmf& level_pmf(int /*level*/) const {
    throw ValidationError("source holds no explicit tables");
  }
  virtual std::optional<double> known_entropy_rate() const { return std::nullopt; }
  // All level-n vertices when enumeration is feasible, else nullopt.
  virtual std::optional<std::vector<Vertex>> enumerate_level(int /*level*/) const {
    return std::nullopt;
  }
  virtual std::string describe(int level, const Vertex& v) const;
};

// Explicit per-level tables over a diagram. The optional indexing enables
// decomposition descent (required by the path dynamics); it is built on
// demand for regular diagrams.
class TableSource : public Source {
 public:
  TableSource(std::shared_ptr<const Diagram> diagram, std::vector<Pmf> levels,
              std::optional<double> entropy_rate = std::nullopt);

  int beta() const override;
  int max_level() const override { return static_cast<int>(levels_.size()) - 1; }
  double log2_prob(int level, const Vertex& v) const override;
  Vertex sample(int level, Rng& rng) const override;
  Vertex child(int level, const Vertex& v, int digit) const override;
  bool has_tables() const override { return true; }
  const Pmf& level_pmf(int level) const override { return levels_.at(level); }
  std::optional<double> known_entropy_rate() const override { return entropy_rate_; }
  std::optional<std::vector<Vertex>> enumerate_level(int level) const override;
  std::string describe(int level, const Vertex& v) const override;

  const Diagram& diagram() const { return *diagram_; }
  const Indexing& indexing() const;

 private:
  std::shared_ptr<const Diagram> diagram_;
  std::vector<Pmf> levels_;
  std::optional<double> entropy_rate_;
  std::shared_ptr<const Indexing> indexing_;  // present for regular diagrams
};

// Product source on the canonical diagram over `alphabet`: level-n vertices
// are symbol strings of length beta^n, each symbol drawn independently.
class IidSource : public Source {
 public:
  IidSource(std::vector<std::string> alphabet, std::vector<double> symbol_probs, int beta,
            int level_budget = 24, std::int64_t enumeration_cap = 4096);

  int beta() const override { return beta_; }
  int max_level() const override { return level_budget_; }
  double log2_prob(int level, const Vertex& v) const override;
  Vertex sample(int level, Rng& rng) const override;
  Vertex child(int level, const Vertex& v, int digit) const override;
  std::optional<double> known_entropy_rate() const override { return symbol_entropy_; }
  std::optional<std::vector<Vertex>> enumerate_level(int level) const override;
  std::string describe(int level, const Vertex& v) const override;

  const std::vector<double>& symbol_probs() const { return probs_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }

 private:
  std::int64_t width(int level) const;  // beta^level, guarded by the budget

  std::vector<std::string> alphabet_;
  std::vector<double> probs_;
  int beta_;
  int level_budget_;
  std::int64_t enumeration_cap_;
  double symbol_entropy_;
};

// Bernoulli(p) embedded as an IID source on the two-symbol canonical
// diagram: P(second symbol) = p.
std::shared_ptr<const Source> iid_bernoulli(double p, int beta = 2);

struct MixtureComponent {
  double weight;
  std::shared_ptr<const Source> source;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  // Weights must be positive and sum to 1 (throws WeightSumError).
  void validate(double tol = 1e-9) const;
};

// Convex combination of sources sharing a diagram. Table components mix
// into explicit tables; otherwise a pointwise mixture oracle is returned.
std::shared_ptr<const Source> mix(const MixtureSpec& spec);

// Repeated transport of a top-level PMF; consistent by construction.
TableSource extend_down(std::shared_ptr<const Diagram> diagram, const Pmf& top);

struct ConsistencyReport {
  bool consistent = false;
  double max_deviation = 0.0;
};

// Checks mu_n = transport(mu_{n+1}) on every available level pair: exactly
// for tables, via level enumeration for oracles (levels that cannot be
// enumerated are skipped).
ConsistencyReport validate_source(const Source& s, double tol = 1e-9);

struct RateValue {
  double bits = 0.0;       // beta^{-n} H(mu_n), exact or estimated
  double std_error = 0.0;  // 0 for exact table evaluation
};

// The entropy-rate upper approximant at one level: exact for tables,
// Monte Carlo mean of -beta^{-n} log2 mu_n(X_n) otherwise.
RateValue entropy_rate_approximant(const Source& s, int level, std::size_t mc_samples,
                                   Rng& rng);

// Approximants for levels 0..up_to (non-increasing within noise).
std::vector<RateValue> entropy_rate_approximants(const Source& s, int up_to,
                                                 std::size_t mc_samples = 100000,
                                                 std::uint64_t seed = 0x5eed);

// Marginal family of a sequential process: k -> PMF over the k-symbol
// strings in lexicographic order.
using MarginalFamily = std::function<std::vector<double>(std::int64_t k)>;

MarginalFamily iid_marginals(std::vector<double> symbol_probs);
// Stationary Markov chain marginals from a row-stochastic transition matrix
// and its stationary distribution.
MarginalFamily markov_marginals(std::vector<std::vector<double>> transition,
                                std::vector<double> stationary);

// Embeds a stationary sequential source into the canonical diagram over
// `alphabet`: mu_n = marginal on strings of length beta^n. Verifies the
// half-marginal consistency up to `tol` (throws NotStationaryError).
TableSource embed_sequential(const std::vector<std::string>& alphabet, int beta,
                             const MarginalFamily& marginals, int up_to,
                             double tol = 1e-9,
                             std::optional<double> entropy_rate = std::nullopt);

}  // namespace bratteli
