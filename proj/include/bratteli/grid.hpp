#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/source.hpp"

namespace bratteli {

using BigInt = boost::multiprecision::cpp_int;

// Lattice point of the level-n complex: integer numerators over beta^n.
using GridPoint = std::vector<std::int64_t>;
using BigLattice = std::vector<BigInt>;

// Point of the hypercube with exact rational coordinates num[c]/den.
struct ExactPoint {
  std::vector<BigInt> num;
  BigInt den = 1;

  // Every double is a dyadic rational; the conversion is exact.
  static ExactPoint from_doubles(const std::vector<double>& coords);
};

// Barycentric distribution of a point with respect to one level: weights over
// the vertex set of the simplex containing the point. Weights are exact
// rationals weight_num[i]/weight_den.
struct ExactBarycentric {
  int level = 0;
  std::vector<BigLattice> support;
  std::vector<BigInt> weight_num;
  BigInt weight_den = 1;

  std::vector<double> weights() const;
};

struct BarycentricDist {
  int level = 0;
  std::vector<std::pair<GridPoint, double>> support;  // point -> weight, weights sum to 1
};

// Cardinality of a recursion set, exact below the bit threshold and tracked
// in the log2 domain beyond it.
struct SetSize {
  std::optional<BigInt> exact;  // present while small
  double log2v = 0.0;
};

inline constexpr int kExactSizeBits = 512;

// The (beta, k) simplicial grid on the unit hypercube: level-n vertices are
// the lattice points i/beta^n, simplexes the scaled translates of the
// permutation simplexes. The grid is beta-admissible, so it induces a
// beta-regular diagram and carries the tau^theta source family.
class KuhnGrid {
 public:
  KuhnGrid(int beta, int k);

  int beta() const { return beta_; }
  int dimension() const { return k_; }

  // (beta^n + 1)^k, guarded against overflow.
  std::int64_t level_vertex_count(int n) const;

  // Lexicographic enumeration of the level-n lattice.
  std::int64_t ordinal_of(const GridPoint& p, int n) const;
  GridPoint point_of(std::int64_t ordinal, int n) const;

  // Exact barycentric distribution of a rational point at level n.
  ExactBarycentric barycentric_exact(const ExactPoint& theta, int n) const;
  // Same for a double point (exact via its dyadic representation); lattice
  // entries must fit std::int64_t.
  BarycentricDist barycentric(const std::vector<double>& theta, int n) const;

  // Multiset of beta level-(n-1) vertices averaging to x (multiplicity =
  // beta times the barycentric weight). Throws NotAdmissibleError if some
  // weight is not a multiple of 1/beta (cannot happen on a Kuhn lattice).
  std::map<GridPoint, int> multiset_of(const GridPoint& x, int n) const;

  // The induced diagram on levels 0..levels (lex vertex order).
  Diagram induced_diagram(int levels, std::int64_t cap = kDefaultLevelCap) const;

  // Barycentric PMF of theta as a dense table over the level-n ordinals.
  Pmf mu_theta_pmf(const std::vector<double>& theta, int n) const;

  // log2 of the recursion-set size |C_n(x)|; memoized across calls.
  double c_size_log2(const GridPoint& x, int n) const;
  // Exact size when it fits the bit threshold.
  std::optional<BigInt> c_size_exact(const GridPoint& x, int n) const;

  // Level-n entropy-rate approximant of tau^theta:
  // beta^{-n} [ H(p_{theta|K_n}) + sum_x p(x) log2 |C_n(x)| ].
  double entropy_approximant(const std::vector<double>& theta, int n) const;

  // Monotone limit of the approximants, iterated in exact lattice arithmetic
  // until the decrease stays below `tol` (or `max_level` is hit).
  double entropy_rate_limit(const std::vector<double>& theta, double tol = 1e-12,
                            int max_level = 400) const;

 private:
  struct SizeKey {
    int level;
    BigLattice point;
    bool operator<(const SizeKey& o) const {
      if (level != o.level) return level < o.level;
      return point < o.point;
    }
  };

  SetSize c_size(const BigLattice& x, int n) const;
  std::map<BigLattice, int> multiset_big(const BigLattice& x, int n) const;
  BigInt width(int n) const;  // beta^n

  int beta_;
  int k_;
  mutable std::mutex mutex_;
  mutable std::map<SizeKey, SetSize> size_memo_;
};

// tau^theta as a sampleable source: a level-n vertex is the flat string of
// beta^n level-0 corners (corner id = sum of coordinate bits shifted by
// axis); the string determines its lattice point by averaging, and the
// point's barycentric mass is spread uniformly over the recursion set.
//
// Dedicated tree-structured compressors exist for this family; here its
// members are coded through the generic combined scheme only.
class TauThetaSource : public Source {
 public:
  TauThetaSource(std::shared_ptr<const KuhnGrid> grid, std::vector<double> theta,
                 int level_budget = 24, std::int64_t enumeration_cap = 4096);

  int beta() const override { return grid_->beta(); }
  int max_level() const override { return level_budget_; }
  double log2_prob(int level, const Vertex& v) const override;
  Vertex sample(int level, Rng& rng) const override;
  Vertex child(int level, const Vertex& v, int digit) const override;
  std::optional<std::vector<Vertex>> enumerate_level(int level) const override;
  std::string describe(int level, const Vertex& v) const override;
  // Estimated through the monotone approximant limit, computed once.
  std::optional<double> known_entropy_rate() const override;

  const KuhnGrid& grid() const { return *grid_; }
  const std::vector<double>& theta() const { return theta_; }

  // Lattice point of a token (sum of its corners).
  GridPoint token_point(int level, const Vertex& v) const;
  // All tokens of C_n(x), lexicographically sorted.
  std::vector<Vertex> c_set(const GridPoint& x, int n) const;

  // The recursion-set diagram restricted to levels 0..levels: vertices are
  // tokens (lex order within each x, x blocks in lattice order).
  std::shared_ptr<const Diagram> c_set_diagram(int levels) const;
  // tau^theta as an explicit table on c_set_diagram(levels).
  TableSource table_source(int levels) const;

 private:
  const BarycentricDist& level_bary(int level) const;
  void expand_into(const GridPoint& x, int n, Rng& rng, Vertex& out) const;
  std::int64_t token_width(int level) const;

  std::shared_ptr<const KuhnGrid> grid_;
  std::vector<double> theta_;
  int level_budget_;
  std::int64_t enumeration_cap_;
  mutable std::mutex mutex_;
  mutable std::map<int, BarycentricDist> bary_cache_;
  mutable std::optional<double> rate_cache_;
};

}  // namespace bratteli
