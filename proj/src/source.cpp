#include "bratteli/source.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bratteli/stats.hpp"

namespace bratteli {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log2_sum_exp2(std::span<const double> log2_terms) {
  double m = kNegInf;
  for (double t : log2_terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : log2_terms) acc += std::exp2(t - m);
  return m + std::log2(acc);
}

}  // namespace

std::string Source::describe(int /*level*/, const Vertex& v) const {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

Pmf transport(const Diagram& d, const Pmf& lambda) {
  const int upper = lambda.level();
  if (upper < 1 || upper > d.max_level())
    throw LevelMismatchError("transport: no level below " + std::to_string(upper));
  if (static_cast<std::int32_t>(lambda.size()) != d.level_size(upper))
    throw LevelMismatchError("transport: PMF size does not match level " +
                             std::to_string(upper));
  std::vector<double> out(d.level_size(upper - 1), 0.0);
  for (std::int32_t w = 0; w < d.level_size(upper); ++w) {
    const Multiset& m = d.multiset(upper, w);
    const double share = lambda[w] / static_cast<double>(multiset_cardinality(m));
    for (const auto& [src, mult] : m) out[src] += share * mult;
  }
  return Pmf(upper - 1, std::move(out));
}

// ---------------------------------------------------------------------------
// TableSource

TableSource::TableSource(std::shared_ptr<const Diagram> diagram, std::vector<Pmf> levels,
                         std::optional<double> entropy_rate)
    : diagram_(std::move(diagram)), levels_(std::move(levels)), entropy_rate_(entropy_rate) {
  if (levels_.empty()) throw ValidationError("TableSource: no levels");
  for (int n = 0; n < static_cast<int>(levels_.size()); ++n) {
    if (levels_[n].level() != n)
      throw LevelMismatchError("TableSource: PMF at position " + std::to_string(n) +
                               " claims level " + std::to_string(levels_[n].level()));
    if (static_cast<std::int32_t>(levels_[n].size()) != diagram_->level_size(n))
      throw LevelMismatchError("TableSource: PMF size mismatch at level " + std::to_string(n));
  }
  // Regular diagrams get their indexing up front; the source is then
  // immutable, and path descent needs no synchronization.
  if (const auto b = diagram_->uniform_beta()) {
    if (check_regular(*diagram_, *b).regular)
      indexing_ = std::make_shared<const Indexing>(Indexing::build(*diagram_, *b));
  }
}

int TableSource::beta() const {
  auto b = diagram_->uniform_beta();
  if (!b) throw ValidationError("TableSource: diagram has no uniform in-degree");
  return *b;
}

const Indexing& TableSource::indexing() const {
  if (!indexing_)
    throw NotRegularError("TableSource: decomposition needs a regular diagram");
  return *indexing_;
}

double TableSource::log2_prob(int level, const Vertex& v) const {
  const double p = levels_.at(level)[static_cast<std::size_t>(v.at(0))];
  return p > 0.0 ? std::log2(p) : kNegInf;
}

Vertex TableSource::sample(int level, Rng& rng) const {
  const Pmf& p = levels_.at(level);
  return {static_cast<std::int32_t>(rng.pick_weighted(p.probs()))};
}

Vertex TableSource::child(int level, const Vertex& v, int digit) const {
  return {indexing().child(level, v.at(0), digit)};
}

std::optional<std::vector<Vertex>> TableSource::enumerate_level(int level) const {
  std::vector<Vertex> out;
  out.reserve(static_cast<std::size_t>(diagram_->level_size(level)));
  for (std::int32_t k = 0; k < diagram_->level_size(level); ++k) out.push_back({k});
  return out;
}

std::string TableSource::describe(int level, const Vertex& v) const {
  return diagram_->label(level, v.at(0));
}

// ---------------------------------------------------------------------------
// IidSource

IidSource::IidSource(std::vector<std::string> alphabet, std::vector<double> symbol_probs,
                     int beta, int level_budget, std::int64_t enumeration_cap)
    : alphabet_(std::move(alphabet)),
      probs_(std::move(symbol_probs)),
      beta_(beta),
      level_budget_(level_budget),
      enumeration_cap_(enumeration_cap) {
  if (beta_ < 2) throw ValidationError("IidSource: beta must be >= 2");
  if (alphabet_.size() != probs_.size() || alphabet_.empty())
    throw ValidationError("IidSource: alphabet/probability size mismatch");
  Pmf check(0, probs_);  // validates nonnegativity and normalization
  symbol_entropy_ = entropy_bits(check);
}

std::int64_t IidSource::width(int level) const {
  if (level < 0 || level > level_budget_)
    throw CapExceededError("IidSource: level " + std::to_string(level) +
                           " beyond the token budget");
  std::int64_t w = 1;
  for (int i = 0; i < level; ++i) w *= beta_;
  return w;
}

double IidSource::log2_prob(int level, const Vertex& v) const {
  if (static_cast<std::int64_t>(v.size()) != width(level))
    throw LevelMismatchError("IidSource: token length does not match level");
  double acc = 0.0;
  for (std::int32_t sym : v) {
    const double p = probs_.at(static_cast<std::size_t>(sym));
    if (p <= 0.0) return kNegInf;
    acc += std::log2(p);
  }
  return acc;
}

Vertex IidSource::sample(int level, Rng& rng) const {
  const std::int64_t w = width(level);
  Vertex v(static_cast<std::size_t>(w));
  for (auto& sym : v) sym = static_cast<std::int32_t>(rng.pick_weighted(probs_));
  return v;
}

Vertex IidSource::child(int level, const Vertex& v, int digit) const {
  const std::int64_t w = width(level - 1);
  const auto begin = v.begin() + static_cast<std::ptrdiff_t>(digit * w);
  return Vertex(begin, begin + static_cast<std::ptrdiff_t>(w));
}

std::optional<std::vector<Vertex>> IidSource::enumerate_level(int level) const {
  const std::int64_t w = width(level);
  const auto m = static_cast<std::int64_t>(probs_.size());
  double log_count = static_cast<double>(w) * std::log2(static_cast<double>(m));
  if (log_count > std::log2(static_cast<double>(enumeration_cap_))) return std::nullopt;
  std::vector<Vertex> out;
  Vertex cur(static_cast<std::size_t>(w), 0);
  while (true) {
    out.push_back(cur);
    std::int64_t pos = w - 1;
    while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == m - 1) {
      cur[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++cur[static_cast<std::size_t>(pos)];
  }
  return out;
}

std::string IidSource::describe(int /*level*/, const Vertex& v) const {
  std::string out;
  for (std::int32_t sym : v) out += alphabet_.at(static_cast<std::size_t>(sym));
  return out;
}

std::shared_ptr<const Source> iid_bernoulli(double p, int beta) {
  if (p < 0.0 || p > 1.0) throw ValidationError("iid_bernoulli: p outside [0,1]");
  return std::make_shared<IidSource>(std::vector<std::string>{"a", "b"},
                                     std::vector<double>{1.0 - p, p}, beta);
}

// ---------------------------------------------------------------------------
// Mixtures

void MixtureSpec::validate(double tol) const {
  if (components.empty()) throw WeightSumError("mixture: no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (c.weight <= 0.0) throw WeightSumError("mixture: weights must be positive");
    if (!c.source) throw ValidationError("mixture: null component");
    sum += c.weight;
  }
  if (std::fabs(sum - 1.0) > tol)
    throw WeightSumError("mixture: weights sum to " + std::to_string(sum));
}

namespace {

class MixtureSource : public Source {
 public:
  explicit MixtureSource(MixtureSpec spec) : spec_(std::move(spec)) {
    const Source& first = *spec_.components.front().source;
    beta_ = first.beta();
    max_level_ = first.max_level();
    for (const auto& c : spec_.components) {
      if (c.source->beta() != beta_)
        throw LevelMismatchError("mixture: components disagree on beta");
      max_level_ = std::min(max_level_, c.source->max_level());
    }
  }

  int beta() const override { return beta_; }
  int max_level() const override { return max_level_; }

  double log2_prob(int level, const Vertex& v) const override {
    std::vector<double> terms;
    terms.reserve(spec_.components.size());
    for (const auto& c : spec_.components)
      terms.push_back(std::log2(c.weight) + c.source->log2_prob(level, v));
    return log2_sum_exp2(terms);
  }

  Vertex sample(int level, Rng& rng) const override {
    std::vector<double> w;
    w.reserve(spec_.components.size());
    for (const auto& c : spec_.components) w.push_back(c.weight);
    const std::size_t pick = rng.pick_weighted(w);
    return spec_.components[pick].source->sample(level, rng);
  }

  Vertex child(int level, const Vertex& v, int digit) const override {
    // Decomposition is structural (shared diagram), identical across components.
    return spec_.components.front().source->child(level, v, digit);
  }

  std::optional<std::vector<Vertex>> enumerate_level(int level) const override {
    return spec_.components.front().source->enumerate_level(level);
  }

  std::string describe(int level, const Vertex& v) const override {
    return spec_.components.front().source->describe(level, v);
  }

 private:
  MixtureSpec spec_;
  int beta_ = 0;
  int max_level_ = 0;
};

}  // namespace

std::shared_ptr<const Source> mix(const MixtureSpec& spec) {
  spec.validate();
  if (spec.components.size() == 1) return spec.components.front().source;

  const bool all_tables = std::all_of(
      spec.components.begin(), spec.components.end(),
      [](const MixtureComponent& c) { return c.source->has_tables(); });
  if (all_tables) {
    const auto* first = dynamic_cast<const TableSource*>(spec.components.front().source.get());
    if (first != nullptr) {
      int top = first->max_level();
      for (const auto& c : spec.components) top = std::min(top, c.source->max_level());
      std::vector<Pmf> mixed;
      for (int n = 0; n <= top; ++n) {
        std::vector<double> p(first->level_pmf(n).size(), 0.0);
        for (const auto& c : spec.components) {
          const Pmf& cp = c.source->level_pmf(n);
          if (cp.size() != p.size())
            throw LevelMismatchError("mixture: level " + std::to_string(n) + " size mismatch");
          for (std::size_t i = 0; i < p.size(); ++i) p[i] += c.weight * cp[i];
        }
        mixed.emplace_back(n, std::move(p));
      }
      return std::make_shared<TableSource>(
          std::shared_ptr<const Diagram>(spec.components.front().source,
                                         &first->diagram()),
          std::move(mixed));
    }
  }
  return std::make_shared<MixtureSource>(spec);
}

TableSource extend_down(std::shared_ptr<const Diagram> diagram, const Pmf& top) {
  const int n = top.level();
  std::vector<Pmf> levels;
  levels.reserve(static_cast<std::size_t>(n) + 1);
  levels.push_back(top);
  for (int k = n; k >= 1; --k) levels.push_back(transport(*diagram, levels.back()));
  std::reverse(levels.begin(), levels.end());
  return TableSource(std::move(diagram), std::move(levels));
}

ConsistencyReport validate_source(const Source& s, double tol) {
  ConsistencyReport rep;
  double max_dev = 0.0;
  if (s.has_tables()) {
    const auto* table = dynamic_cast<const TableSource*>(&s);
    if (table == nullptr) throw ValidationError("validate_source: unknown table source");
    for (int n = table->max_level(); n >= 1; --n) {
      const Pmf moved = transport(table->diagram(), table->level_pmf(n));
      const Pmf& stored = table->level_pmf(n - 1);
      for (std::size_t i = 0; i < stored.size(); ++i)
        max_dev = std::max(max_dev, std::fabs(moved[i] - stored[i]));
    }
  } else {
    const int beta = s.beta();
    bool any = false;
    for (int n = 1; n <= s.max_level(); ++n) {
      const auto upper = s.enumerate_level(n);
      const auto lower = s.enumerate_level(n - 1);
      if (!upper || !lower) break;
      any = true;
      // Pointwise probabilities of an enumerable level must sum to 1.
      double total = 0.0;
      std::map<Vertex, double> pushed;
      for (const Vertex& w : *upper) {
        const double p = std::exp2(s.log2_prob(n, w));
        total += p;
        for (int i = 0; i < beta; ++i)
          pushed[s.child(n, w, i)] += p / static_cast<double>(beta);
      }
      max_dev = std::max(max_dev, std::fabs(total - 1.0));
      for (const Vertex& u : *lower) {
        const double have = std::exp2(s.log2_prob(n - 1, u));
        const auto it = pushed.find(u);
        const double got = it == pushed.end() ? 0.0 : it->second;
        max_dev = std::max(max_dev, std::fabs(have - got));
      }
    }
    if (!any) throw NoSamplerError("validate_source: no enumerable levels");
  }
  rep.max_deviation = max_dev;
  rep.consistent = max_dev <= tol;
  return rep;
}

RateValue entropy_rate_approximant(const Source& s, int level, std::size_t mc_samples,
                                   Rng& rng) {
  const double scale = std::pow(static_cast<double>(s.beta()), -level);
  if (s.has_tables()) return {scale * entropy_bits(s.level_pmf(level)), 0.0};
  RunningStats stats;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    const Vertex v = s.sample(level, rng);
    const double l2 = s.log2_prob(level, v);
    if (!std::isfinite(l2))
      throw ZeroProbabilityError("entropy_rate_approximant: sampled vertex outside support");
    stats.add(-scale * l2);
  }
  return {stats.mean(), stats.std_error()};
}

std::vector<RateValue> entropy_rate_approximants(const Source& s, int up_to,
                                                 std::size_t mc_samples, std::uint64_t seed) {
  if (up_to > s.max_level())
    throw CapExceededError("entropy_rate_approximants: level beyond the source budget");
  std::vector<RateValue> out;
  Rng rng(seed);
  for (int n = 0; n <= up_to; ++n) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(n));
    out.push_back(entropy_rate_approximant(s, n, mc_samples, stream));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequential embeddings

MarginalFamily iid_marginals(std::vector<double> symbol_probs) {
  Pmf check(0, symbol_probs);
  return [p = std::move(symbol_probs)](std::int64_t k) {
    const auto m = static_cast<std::int64_t>(p.size());
    std::int64_t count = 1;
    for (std::int64_t i = 0; i < k; ++i) {
      if (count > (1 << 26) / m) throw CapExceededError("iid_marginals: table too large");
      count *= m;
    }
    std::vector<double> out(static_cast<std::size_t>(count), 1.0);
    for (std::int64_t r = 0; r < count; ++r) {
      std::int64_t v = r;
      for (std::int64_t i = 0; i < k; ++i) {
        out[static_cast<std::size_t>(r)] *= p[static_cast<std::size_t>(v % m)];
        v /= m;
      }
    }
    return out;
  };
}

MarginalFamily markov_marginals(std::vector<std::vector<double>> transition,
                                std::vector<double> stationary) {
  const auto m = stationary.size();
  if (transition.size() != m) throw ValidationError("markov_marginals: shape mismatch");
  for (const auto& row : transition) {
    Pmf check(0, row);
    if (row.size() != m) throw ValidationError("markov_marginals: shape mismatch");
  }
  Pmf check_pi(0, stationary);
  // pi must actually be stationary, or the embedding will not be consistent.
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += stationary[i] * transition[i][j];
    if (std::fabs(acc - stationary[j]) > 1e-9)
      throw NotStationaryError("markov_marginals: pi is not stationary for P");
  }
  return [P = std::move(transition), pi = std::move(stationary), m](std::int64_t k) {
    std::int64_t count = 1;
    for (std::int64_t i = 0; i < k; ++i) {
      if (count > (1 << 26) / static_cast<std::int64_t>(m))
        throw CapExceededError("markov_marginals: table too large");
      count *= static_cast<std::int64_t>(m);
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::int64_t r = 0; r < count; ++r) {
      // Symbols of string rank r, most significant first.
      std::vector<std::size_t> sym(static_cast<std::size_t>(k));
      std::int64_t v = r;
      for (std::int64_t pos = k - 1; pos >= 0; --pos) {
        sym[static_cast<std::size_t>(pos)] = static_cast<std::size_t>(v % m);
        v /= static_cast<std::int64_t>(m);
      }
      double p = pi[sym[0]];
      for (std::int64_t i = 1; i < k; ++i)
        p *= P[sym[static_cast<std::size_t>(i - 1)]][sym[static_cast<std::size_t>(i)]];
      out[static_cast<std::size_t>(r)] = p;
    }
    return out;
  };
}

TableSource embed_sequential(const std::vector<std::string>& alphabet, int beta,
                             const MarginalFamily& marginals, int up_to, double tol,
                             std::optional<double> entropy_rate) {
  auto diagram =
      std::make_shared<const Diagram>(canonical_diagram(alphabet, beta, up_to));
  const auto m = static_cast<std::int64_t>(alphabet.size());

  std::vector<Pmf> levels;
  std::int64_t k = 1;
  for (int n = 0; n <= up_to; ++n) {
    levels.emplace_back(n, marginals(k));
    if (static_cast<std::int32_t>(levels.back().size()) != diagram->level_size(n))
      throw LevelMismatchError("embed_sequential: marginal size mismatch at level " +
                               std::to_string(n));
    if (n < up_to) k *= beta;
  }

  // Stationary consistency: every aligned slice marginal of the level-n table
  // must match the level-(n-1) table.
  k = 1;
  for (int n = 1; n <= up_to; ++n) {
    k *= beta;
    const std::int64_t w = k / beta;  // slice length
    std::int64_t slice_count = 1;
    for (std::int64_t i = 0; i < w; ++i) slice_count *= m;
    const Pmf& big = levels[static_cast<std::size_t>(n)];
    const Pmf& small = levels[static_cast<std::size_t>(n - 1)];
    for (int pos = 0; pos < beta; ++pos) {
      std::vector<double> marg(static_cast<std::size_t>(slice_count), 0.0);
      std::int64_t shift = 1;
      for (int j = beta - 1 - pos; j >= 1; --j) shift *= slice_count;
      for (std::size_t r = 0; r < big.size(); ++r) {
        const auto slice = static_cast<std::size_t>(
            (static_cast<std::int64_t>(r) / shift) % slice_count);
        marg[slice] += big[r];
      }
      for (std::size_t i = 0; i < marg.size(); ++i) {
        if (std::fabs(marg[i] - small[i]) > tol)
          throw NotStationaryError(
              "embed_sequential: slice " + std::to_string(pos) + " marginal at level " +
              std::to_string(n) + " deviates by " +
              std::to_string(std::fabs(marg[i] - small[i])));
      }
    }
  }
  return TableSource(std::move(diagram), std::move(levels), entropy_rate);
}

}  // namespace bratteli
