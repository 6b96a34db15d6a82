#include "bratteli/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bratteli {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double to_double(const BigInt& v) { return v.convert_to<double>(); }

// log2 of a positive big integer, using the top bits for the mantissa.
double log2_big(const BigInt& v) {
  const auto bits = msb(v);  // position of the highest set bit
  if (bits <= 52) return std::log2(to_double(v));
  const BigInt top = v >> (static_cast<int>(bits) - 52);
  return std::log2(to_double(top)) + static_cast<double>(bits - 52);
}

// Exact rational-to-double division num/den.
double ratio(const BigInt& num, const BigInt& den) {
  // Scale so both operands survive the double conversion.
  if (num == 0) return 0.0;
  const long shift =
      std::max<long>(0, static_cast<long>(std::max(msb(num), msb(den))) - 52);
  return to_double(num >> shift) / to_double(den >> shift);
}

}  // namespace

ExactPoint ExactPoint::from_doubles(const std::vector<double>& coords) {
  // Common denominator 2^s with s the largest scale among the coordinates.
  int max_scale = 0;
  std::vector<std::pair<std::int64_t, int>> parts;  // mantissa, scale
  for (double c : coords) {
    if (!std::isfinite(c)) throw OutOfDomainError("coordinate is not finite");
    int exp = 0;
    const double f = std::frexp(c, &exp);  // c = f * 2^exp, |f| in [0.5, 1)
    const auto mant = static_cast<std::int64_t>(std::ldexp(f, 53));  // exact
    const int scale = 53 - exp;
    parts.emplace_back(mant, scale);
    max_scale = std::max(max_scale, scale);
  }
  ExactPoint p;
  p.den = BigInt(1) << max_scale;
  for (auto [mant, scale] : parts) p.num.push_back(BigInt(mant) << (max_scale - scale));
  return p;
}

KuhnGrid::KuhnGrid(int beta, int k) : beta_(beta), k_(k) {
  if (beta < 2) throw ValidationError("KuhnGrid: beta must be >= 2");
  if (k < 1) throw ValidationError("KuhnGrid: dimension must be >= 1");
}

BigInt KuhnGrid::width(int n) const {
  BigInt w = 1;
  for (int i = 0; i < n; ++i) w *= beta_;
  return w;
}

std::int64_t KuhnGrid::level_vertex_count(int n) const {
  const BigInt side = width(n) + 1;
  BigInt total = 1;
  for (int c = 0; c < k_; ++c) total *= side;
  if (total > std::numeric_limits<std::int64_t>::max())
    throw CapExceededError("KuhnGrid: level " + std::to_string(n) + " vertex count overflows");
  return total.convert_to<std::int64_t>();
}

std::int64_t KuhnGrid::ordinal_of(const GridPoint& p, int n) const {
  const BigInt side = width(n) + 1;
  if (side > std::numeric_limits<std::int64_t>::max())
    throw CapExceededError("KuhnGrid: level too deep for ordinals");
  const auto s = side.convert_to<std::int64_t>();
  std::int64_t ord = 0;
  for (int c = 0; c < k_; ++c) {
    if (p[c] < 0 || p[c] >= s) throw OutOfDomainError("lattice point outside the cube");
    ord = ord * s + p[c];
  }
  return ord;
}

GridPoint KuhnGrid::point_of(std::int64_t ordinal, int n) const {
  const auto s = (width(n) + 1).convert_to<std::int64_t>();
  GridPoint p(static_cast<std::size_t>(k_));
  for (int c = k_ - 1; c >= 0; --c) {
    p[static_cast<std::size_t>(c)] = ordinal % s;
    ordinal /= s;
  }
  return p;
}

ExactBarycentric KuhnGrid::barycentric_exact(const ExactPoint& theta, int n) const {
  if (static_cast<int>(theta.num.size()) != k_)
    throw OutOfDomainError("barycentric: dimension mismatch");
  const BigInt w = width(n);
  ExactBarycentric out;
  out.level = n;
  out.weight_den = theta.den;

  // Scaled coordinates u_c = theta_c * beta^n = scaled_c / den; the integer
  // cell is floor(u), clamped so points on the upper face stay in a cell,
  // and r_c = den * frac(u_c) (r_c = den exactly on the clamped face).
  BigLattice cell(static_cast<std::size_t>(k_));
  std::vector<BigInt> r(static_cast<std::size_t>(k_));
  for (int c = 0; c < k_; ++c) {
    const BigInt& num = theta.num[static_cast<std::size_t>(c)];
    if (num < 0 || num > theta.den) throw OutOfDomainError("point outside the hypercube");
    const BigInt scaled = num * w;
    BigInt z = scaled / theta.den;
    if (z == w && w > 0) z -= 1;  // clamp theta_c == 1
    cell[static_cast<std::size_t>(c)] = z;
    r[static_cast<std::size_t>(c)] = scaled - z * theta.den;
  }

  // Vertices of the containing permutation simplex: walk from the cell corner
  // along axes sorted by descending fractional part (stable on ties).
  std::vector<int> axes(static_cast<std::size_t>(k_));
  std::iota(axes.begin(), axes.end(), 0);
  std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) {
    return r[static_cast<std::size_t>(a)] > r[static_cast<std::size_t>(b)];
  });

  BigLattice v = cell;
  BigInt prev = theta.den;
  for (int j = 0; j <= k_; ++j) {
    const BigInt cur = j < k_ ? r[static_cast<std::size_t>(axes[static_cast<std::size_t>(j)])]
                              : BigInt(0);
    const BigInt weight = prev - cur;
    if (weight > 0) {
      out.support.push_back(v);
      out.weight_num.push_back(weight);
    }
    if (j < k_) v[static_cast<std::size_t>(axes[static_cast<std::size_t>(j)])] += 1;
    prev = cur;
  }
  return out;
}

std::vector<double> ExactBarycentric::weights() const {
  std::vector<double> out;
  out.reserve(weight_num.size());
  for (const BigInt& num : weight_num) out.push_back(ratio(num, weight_den));
  return out;
}

BarycentricDist KuhnGrid::barycentric(const std::vector<double>& theta, int n) const {
  const ExactBarycentric exact = barycentric_exact(ExactPoint::from_doubles(theta), n);
  BarycentricDist out;
  out.level = n;
  const std::vector<double> w = exact.weights();
  for (std::size_t i = 0; i < exact.support.size(); ++i) {
    GridPoint p;
    p.reserve(static_cast<std::size_t>(k_));
    for (const BigInt& coord : exact.support[i]) {
      if (coord > std::numeric_limits<std::int64_t>::max())
        throw CapExceededError("barycentric: lattice exceeds 64-bit range");
      p.push_back(coord.convert_to<std::int64_t>());
    }
    out.support.emplace_back(std::move(p), w[i]);
  }
  return out;
}

std::map<BigLattice, int> KuhnGrid::multiset_big(const BigLattice& x, int n) const {
  // Barycentric distribution of x (a level-n vertex) with respect to level
  // n-1; admissibility demands weights in (1/beta) Z.
  ExactPoint p;
  p.den = width(n);
  p.num = x;
  const ExactBarycentric bary = barycentric_exact(p, n - 1);
  std::map<BigLattice, int> out;
  for (std::size_t i = 0; i < bary.support.size(); ++i) {
    const BigInt scaled = bary.weight_num[i] * beta_;
    if (scaled % bary.weight_den != 0)
      throw NotAdmissibleError("grid: barycentric weight is not a multiple of 1/beta");
    out[bary.support[i]] += (scaled / bary.weight_den).convert_to<int>();
  }
  return out;
}

std::map<GridPoint, int> KuhnGrid::multiset_of(const GridPoint& x, int n) const {
  if (n < 1) throw LevelMismatchError("multiset_of: needs level >= 1");
  BigLattice big(x.begin(), x.end());
  std::map<GridPoint, int> out;
  for (const auto& [p, mult] : multiset_big(big, n)) {
    GridPoint q;
    for (const BigInt& coord : p) q.push_back(coord.convert_to<std::int64_t>());
    out[q] = mult;
  }
  return out;
}

Diagram KuhnGrid::induced_diagram(int levels, std::int64_t cap) const {
  std::vector<std::vector<std::string>> labels(static_cast<std::size_t>(levels) + 1);
  std::vector<std::vector<Multiset>> multisets(static_cast<std::size_t>(levels));
  for (int n = 0; n <= levels; ++n) {
    const std::int64_t count = level_vertex_count(n);
    if (count > cap)
      throw CapExceededError("induced_diagram: level " + std::to_string(n) + " exceeds cap");
    auto& lbl = labels[static_cast<std::size_t>(n)];
    lbl.resize(static_cast<std::size_t>(count));
    const BigInt denom = width(n);
    for (std::int64_t ord = 0; ord < count; ++ord) {
      const GridPoint p = point_of(ord, n);
      std::string s;
      for (int c = 0; c < k_; ++c) {
        if (c) s += ',';
        s += std::to_string(p[static_cast<std::size_t>(c)]);
        s += '/';
        s += denom.str();
      }
      lbl[static_cast<std::size_t>(ord)] = std::move(s);
    }
    if (n >= 1) {
      auto& ms = multisets[static_cast<std::size_t>(n - 1)];
      ms.resize(static_cast<std::size_t>(count));
      for (std::int64_t ord = 0; ord < count; ++ord) {
        Multiset entry;
        for (const auto& [p, mult] : multiset_of(point_of(ord, n), n))
          entry[static_cast<std::int32_t>(ordinal_of(p, n - 1))] = mult;
        ms[static_cast<std::size_t>(ord)] = std::move(entry);
      }
    }
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

Pmf KuhnGrid::mu_theta_pmf(const std::vector<double>& theta, int n) const {
  const std::int64_t count = level_vertex_count(n);
  if (count > kDefaultLevelCap) throw CapExceededError("mu_theta_pmf: level too large");
  std::vector<double> p(static_cast<std::size_t>(count), 0.0);
  for (const auto& [point, weight] : barycentric(theta, n).support)
    p[static_cast<std::size_t>(ordinal_of(point, n))] = weight;
  return Pmf(n, std::move(p));
}

SetSize KuhnGrid::c_size(const BigLattice& x, int n) const {
  if (n == 0) return {BigInt(1), 0.0};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = size_memo_.find(SizeKey{n, x});
    if (it != size_memo_.end()) return it->second;
  }
  const auto multiset = multiset_big(x, n);
  // Every ordering of the multiset contributes the same product of child
  // set sizes, so the union over orderings has size N(M) * prod sizes.
  Multiset shape;  // multiplicities only, for the orderings count
  std::int32_t tag = 0;
  for (const auto& [p, mult] : multiset) shape[tag++] = mult;
  const std::uint64_t orderings = multiset_orderings_count(shape);

  bool exact = true;
  BigInt count = orderings;
  double log2v = std::log2(static_cast<double>(orderings));
  for (const auto& [p, mult] : multiset) {
    const SetSize child = c_size(p, n - 1);
    log2v += mult * child.log2v;
    if (exact && child.exact) {
      for (int i = 0; i < mult; ++i) count *= *child.exact;
      if (msb(count) + 1 > kExactSizeBits) exact = false;
    } else {
      exact = false;
    }
  }
  SetSize out;
  if (exact) {
    out.exact = count;
    out.log2v = log2_big(count);
  } else {
    out.log2v = log2v;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  return size_memo_.emplace(SizeKey{n, x}, out).first->second;
}

double KuhnGrid::c_size_log2(const GridPoint& x, int n) const {
  return c_size(BigLattice(x.begin(), x.end()), n).log2v;
}

std::optional<BigInt> KuhnGrid::c_size_exact(const GridPoint& x, int n) const {
  return c_size(BigLattice(x.begin(), x.end()), n).exact;
}

double KuhnGrid::entropy_approximant(const std::vector<double>& theta, int n) const {
  const ExactBarycentric bary = barycentric_exact(ExactPoint::from_doubles(theta), n);
  const std::vector<double> w = bary.weights();
  double acc = entropy_bits(w);
  for (std::size_t i = 0; i < bary.support.size(); ++i)
    acc += w[i] * c_size(bary.support[i], n).log2v;
  return std::pow(static_cast<double>(beta_), -n) * acc;
}

double KuhnGrid::entropy_rate_limit(const std::vector<double>& theta, double tol,
                                    int max_level) const {
  const ExactPoint p = ExactPoint::from_doubles(theta);
  double prev = std::numeric_limits<double>::infinity();
  double cur = 0.0;
  int stable = 0;
  for (int n = 1; n <= max_level; ++n) {
    const ExactBarycentric bary = barycentric_exact(p, n);
    const std::vector<double> w = bary.weights();
    double acc = entropy_bits(w);
    for (std::size_t i = 0; i < bary.support.size(); ++i)
      acc += w[i] * c_size(bary.support[i], n).log2v;
    cur = std::pow(static_cast<double>(beta_), -n) * acc;
    if (std::isfinite(prev) && std::fabs(prev - cur) <= tol) {
      if (++stable >= 3) return cur;
    } else {
      stable = 0;
    }
    prev = cur;
  }
  return cur;  // monotone sequence: best available upper value
}

// ---------------------------------------------------------------------------
// TauThetaSource

TauThetaSource::TauThetaSource(std::shared_ptr<const KuhnGrid> grid, std::vector<double> theta,
                               int level_budget, std::int64_t enumeration_cap)
    : grid_(std::move(grid)),
      theta_(std::move(theta)),
      level_budget_(level_budget),
      enumeration_cap_(enumeration_cap) {
  if (static_cast<int>(theta_.size()) != grid_->dimension())
    throw OutOfDomainError("tau^theta: dimension mismatch");
  for (double c : theta_)
    if (!(c >= 0.0 && c <= 1.0)) throw OutOfDomainError("tau^theta: point outside hypercube");
}

std::int64_t TauThetaSource::token_width(int level) const {
  if (level < 0 || level > level_budget_)
    throw CapExceededError("tau^theta: level beyond the token budget");
  std::int64_t w = 1;
  for (int i = 0; i < level; ++i) w *= grid_->beta();
  return w;
}

const BarycentricDist& TauThetaSource::level_bary(int level) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = bary_cache_.find(level);
  if (it == bary_cache_.end())
    it = bary_cache_.emplace(level, grid_->barycentric(theta_, level)).first;
  return it->second;
}

GridPoint TauThetaSource::token_point(int level, const Vertex& v) const {
  if (static_cast<std::int64_t>(v.size()) != token_width(level))
    throw LevelMismatchError("tau^theta: token length does not match level");
  const int k = grid_->dimension();
  GridPoint sum(static_cast<std::size_t>(k), 0);
  for (std::int32_t corner : v)
    for (int c = 0; c < k; ++c) sum[static_cast<std::size_t>(c)] += (corner >> c) & 1;
  return sum;
}

double TauThetaSource::log2_prob(int level, const Vertex& v) const {
  const GridPoint x = token_point(level, v);
  for (const auto& [point, weight] : level_bary(level).support) {
    if (point == x)
      return weight > 0.0 ? std::log2(weight) - grid_->c_size_log2(x, level) : kNegInf;
  }
  return kNegInf;
}

void TauThetaSource::expand_into(const GridPoint& x, int n, Rng& rng, Vertex& out) const {
  if (n == 0) {
    std::int32_t corner = 0;
    for (int c = 0; c < grid_->dimension(); ++c)
      corner |= static_cast<std::int32_t>((x[static_cast<std::size_t>(c)] & 1) << c);
    out.push_back(corner);
    return;
  }
  // All orderings of the multiset carry the same product of child set sizes,
  // so a uniformly random ordering realizes the uniform law on C_n(x).
  std::vector<GridPoint> slots;
  for (const auto& [p, mult] : grid_->multiset_of(x, n))
    for (int i = 0; i < mult; ++i) slots.push_back(p);
  for (std::size_t i = slots.size(); i > 1; --i)
    std::swap(slots[i - 1], slots[rng.next_below(i)]);
  for (const GridPoint& u : slots) expand_into(u, n - 1, rng, out);
}

Vertex TauThetaSource::sample(int level, Rng& rng) const {
  const BarycentricDist& bary = level_bary(level);
  std::vector<double> w;
  w.reserve(bary.support.size());
  for (const auto& [point, weight] : bary.support) w.push_back(weight);
  const GridPoint& x = bary.support[rng.pick_weighted(w)].first;
  Vertex out;
  out.reserve(static_cast<std::size_t>(token_width(level)));
  expand_into(x, level, rng, out);
  return out;
}

Vertex TauThetaSource::child(int level, const Vertex& v, int digit) const {
  const std::int64_t w = token_width(level - 1);
  const auto begin = v.begin() + static_cast<std::ptrdiff_t>(digit * w);
  return Vertex(begin, begin + static_cast<std::ptrdiff_t>(w));
}

std::vector<Vertex> TauThetaSource::c_set(const GridPoint& x, int n) const {
  if (n == 0) {
    std::int32_t corner = 0;
    for (int c = 0; c < grid_->dimension(); ++c)
      corner |= static_cast<std::int32_t>((x[static_cast<std::size_t>(c)] & 1) << c);
    return {Vertex{corner}};
  }
  // Literal recursion: union over orderings of products of child sets.
  std::vector<GridPoint> sorted_elems;
  for (const auto& [p, mult] : grid_->multiset_of(x, n))
    for (int i = 0; i < mult; ++i) sorted_elems.push_back(p);
  std::vector<Vertex> out;
  std::vector<GridPoint> ordering = sorted_elems;
  do {
    std::vector<Vertex> partial{Vertex{}};
    for (const GridPoint& u : ordering) {
      std::vector<Vertex> next;
      for (const Vertex& prefix : partial) {
        for (const Vertex& block : c_set(u, n - 1)) {
          Vertex joined = prefix;
          joined.insert(joined.end(), block.begin(), block.end());
          next.push_back(std::move(joined));
        }
      }
      partial = std::move(next);
      if (partial.size() > static_cast<std::size_t>(enumeration_cap_))
        throw CapExceededError("tau^theta: recursion set exceeds the enumeration cap");
    }
    out.insert(out.end(), partial.begin(), partial.end());
    if (out.size() > static_cast<std::size_t>(enumeration_cap_))
      throw CapExceededError("tau^theta: recursion set exceeds the enumeration cap");
  } while (std::next_permutation(ordering.begin(), ordering.end()));
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<Vertex>> TauThetaSource::enumerate_level(int level) const {
  const std::int64_t count = grid_->level_vertex_count(level);
  if (count > enumeration_cap_) return std::nullopt;
  std::vector<Vertex> out;
  try {
    for (std::int64_t ord = 0; ord < count; ++ord) {
      const auto block = c_set(grid_->point_of(ord, level), level);
      out.insert(out.end(), block.begin(), block.end());
      if (out.size() > static_cast<std::size_t>(enumeration_cap_)) return std::nullopt;
    }
  } catch (const CapExceededError&) {
    return std::nullopt;
  }
  return out;
}

std::string TauThetaSource::describe(int level, const Vertex& v) const {
  (void)level;
  std::string out;
  for (std::int32_t corner : v) out += std::to_string(corner);
  return out;
}

std::optional<double> TauThetaSource::known_entropy_rate() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!rate_cache_) rate_cache_ = grid_->entropy_rate_limit(theta_);
  return rate_cache_;
}

std::shared_ptr<const Diagram> TauThetaSource::c_set_diagram(int levels) const {
  // Per level: the recursion-set blocks in lattice order (each block lex
  // sorted) plus their starting offsets, for child-rank lookups.
  std::vector<std::vector<std::vector<Vertex>>> blocks(static_cast<std::size_t>(levels) + 1);
  std::vector<std::vector<std::size_t>> offsets(static_cast<std::size_t>(levels) + 1);
  for (int n = 0; n <= levels; ++n) {
    const std::int64_t count = grid_->level_vertex_count(n);
    std::size_t total = 0;
    for (std::int64_t ord = 0; ord < count; ++ord) {
      auto block = c_set(grid_->point_of(ord, n), n);
      offsets[static_cast<std::size_t>(n)].push_back(total);
      total += block.size();
      blocks[static_cast<std::size_t>(n)].push_back(std::move(block));
      if (total > static_cast<std::size_t>(enumeration_cap_))
        throw CapExceededError("c_set_diagram: level " + std::to_string(n) + " too large");
    }
  }
  auto rank_of = [&](int level, const Vertex& v) {
    const std::int64_t block_ord = grid_->ordinal_of(token_point(level, v), level);
    const auto& block = blocks[static_cast<std::size_t>(level)][static_cast<std::size_t>(block_ord)];
    const auto it = std::lower_bound(block.begin(), block.end(), v);
    return static_cast<std::int32_t>(
        offsets[static_cast<std::size_t>(level)][static_cast<std::size_t>(block_ord)] +
        static_cast<std::size_t>(it - block.begin()));
  };

  std::vector<std::vector<std::string>> labels(blocks.size());
  std::vector<std::vector<Multiset>> multisets(static_cast<std::size_t>(levels));
  for (int n = 0; n <= levels; ++n) {
    auto& lbl = labels[static_cast<std::size_t>(n)];
    for (const auto& block : blocks[static_cast<std::size_t>(n)])
      for (const Vertex& v : block) lbl.push_back(describe(n, v));
    if (n >= 1) {
      auto& ms = multisets[static_cast<std::size_t>(n - 1)];
      ms.resize(lbl.size());
      std::size_t i = 0;
      for (const auto& block : blocks[static_cast<std::size_t>(n)]) {
        for (const Vertex& v : block) {
          for (int d = 0; d < grid_->beta(); ++d)
            ms[i][rank_of(n - 1, child(n, v, d))] += 1;
          ++i;
        }
      }
    }
  }
  return std::make_shared<const Diagram>(
      Diagram::build(std::move(labels), std::move(multisets)));
}

TableSource TauThetaSource::table_source(int levels) const {
  auto diagram = c_set_diagram(levels);
  std::vector<Pmf> pmfs;
  for (int n = 0; n <= levels; ++n) {
    const auto t = enumerate_level(n);
    std::vector<double> p;
    p.reserve(t->size());
    for (const Vertex& v : *t) p.push_back(std::exp2(log2_prob(n, v)));
    pmfs.emplace_back(n, std::move(p));
  }
  return TableSource(std::move(diagram), std::move(pmfs));
}

}  // namespace bratteli
