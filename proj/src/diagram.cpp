#include "bratteli/diagram.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace bratteli {

namespace {

// a * b with saturation at 2^63-1.
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::int64_t>::max();
  if (a != 0 && b > kMax / a) return kMax;
  return a * b;
}

}  // namespace

std::uint64_t multiset_orderings_count(const Multiset& m) {
  if (m.empty()) throw EmptyMultisetError("multiset_orderings_count: empty multiset");
  // |M|! / prod m_i!  computed as a product of binomials to stay integral:
  // N = prod_i C(remaining, m_i).
  std::int64_t remaining = multiset_cardinality(m);
  std::uint64_t result = 1;
  for (const auto& [v, mult] : m) {
    for (std::int32_t j = 1; j <= mult; ++j) {
      // result *= remaining / j, with remaining decreasing one at a time.
      result = sat_mul(result, static_cast<std::uint64_t>(remaining));
      result /= static_cast<std::uint64_t>(j);
      --remaining;
    }
  }
  return result;
}

Diagram Diagram::build(std::vector<std::vector<std::string>> level_labels,
                       std::vector<std::vector<Multiset>> multisets) {
  if (level_labels.empty()) throw EmptyLevelError("diagram has no levels");
  if (multisets.size() + 1 != level_labels.size())
    throw ValidationError("diagram: expected one multiset family per level above 0");

  const int top = static_cast<int>(level_labels.size()) - 1;
  for (int n = 0; n <= top; ++n) {
    if (level_labels[n].empty())
      throw EmptyLevelError("level " + std::to_string(n) + " is empty");
  }
  for (int n = 1; n <= top; ++n) {
    const auto& ms = multisets[n - 1];
    if (ms.size() != level_labels[n].size())
      throw ValidationError("level " + std::to_string(n) + ": multiset count mismatch");
    const auto below = static_cast<std::int32_t>(level_labels[n - 1].size());
    std::vector<bool> used(below, false);
    for (std::size_t k = 0; k < ms.size(); ++k) {
      if (ms[k].empty())
        throw EmptyMultisetError("vertex " + std::to_string(n) + ":" + std::to_string(k) +
                                 " has an empty multiset");
      for (const auto& [src, mult] : ms[k]) {
        if (src < 0 || src >= below)
          throw ValidationError("vertex " + std::to_string(n) + ":" + std::to_string(k) +
                                " references out-of-range source " + std::to_string(src));
        if (mult <= 0)
          throw ValidationError("nonpositive multiplicity at vertex " + std::to_string(n) +
                                ":" + std::to_string(k));
        used[src] = true;
      }
    }
    for (std::int32_t v = 0; v < below; ++v) {
      if (!used[v])
        throw OrphanVertexError("vertex " + std::to_string(n - 1) + ":" + std::to_string(v) +
                                " is the source of no edge into level " + std::to_string(n));
    }
  }

  Diagram d;
  d.labels_ = std::move(level_labels);
  d.multisets_ = std::move(multisets);
  return d;
}

std::optional<int> Diagram::uniform_beta() const {
  std::optional<int> beta;
  for (int n = 1; n <= max_level(); ++n) {
    for (std::int32_t k = 0; k < level_size(n); ++k) {
      const auto deg = in_degree(n, k);
      if (!beta) beta = static_cast<int>(deg);
      else if (*beta != deg) return std::nullopt;
    }
  }
  return beta;
}

std::string Diagram::vertex_name(int level, std::int32_t ordinal) const {
  const std::string& lbl = labels_[level][ordinal];
  std::string name = std::to_string(level) + ":" + std::to_string(ordinal);
  if (!lbl.empty()) name += " (" + lbl + ")";
  return name;
}

RegularityReport check_regular(const Diagram& d, int beta) {
  RegularityReport rep;
  for (int n = 1; n <= d.max_level(); ++n) {
    for (std::int32_t k = 0; k < d.level_size(n); ++k) {
      const auto deg = d.in_degree(n, k);
      if (deg != beta) {
        rep.violation = "vertex " + d.vertex_name(n, k) + " has in-degree " +
                        std::to_string(deg) + ", expected " + std::to_string(beta);
        rep.level = n;
        rep.ordinal = k;
        return rep;
      }
    }
  }
  for (int n = 1; n <= d.max_level(); ++n) {
    std::map<Multiset, std::vector<std::int32_t>> groups;
    for (std::int32_t k = 0; k < d.level_size(n); ++k)
      groups[d.multiset(n, k)].push_back(k);
    for (const auto& [m, members] : groups) {
      const std::uint64_t n_orderings = multiset_orderings_count(m);
      if (members.size() > n_orderings) {
        const std::int32_t k = members[n_orderings];  // first vertex past the bound
        rep.violation = std::to_string(members.size()) + " vertices at level " +
                        std::to_string(n) + " share a multiset with only " +
                        std::to_string(n_orderings) + " orderings (first excess vertex " +
                        d.vertex_name(n, k) + ")";
        rep.level = n;
        rep.ordinal = k;
        return rep;
      }
    }
  }
  rep.regular = true;
  return rep;
}

Indexing Indexing::build(const Diagram& d, int beta) {
  const RegularityReport rep = check_regular(d, beta);
  if (!rep.regular) throw NotRegularError("indexing requires a regular diagram: " + rep.violation);

  Indexing idx;
  idx.beta_ = beta;
  idx.tuples_.resize(d.max_level());
  for (int n = 1; n <= d.max_level(); ++n) {
    auto& level_tuples = idx.tuples_[n - 1];
    level_tuples.resize(d.level_size(n));
    // Group ordinals by multiset value; members stay in ordinal order.
    std::map<Multiset, std::vector<std::int32_t>> groups;
    for (std::int32_t k = 0; k < d.level_size(n); ++k)
      groups[d.multiset(n, k)].push_back(k);
    for (const auto& [m, members] : groups) {
      // Ascending expansion of the multiset = lexicographically smallest
      // ordering; next_permutation walks the distinct orderings in order.
      std::vector<std::int32_t> ordering;
      for (const auto& [v, mult] : m)
        ordering.insert(ordering.end(), mult, v);
      for (std::int32_t member : members) {
        level_tuples[member] = ordering;
        std::next_permutation(ordering.begin(), ordering.end());
      }
    }
  }
  return idx;
}

std::string CanonicalImage::render(const Diagram& d, int level, std::int32_t ordinal) const {
  std::string out;
  for (std::int32_t sym : eta[level][ordinal]) out += d.label(0, sym);
  return out;
}

CanonicalizeResult canonicalize(const Diagram& d, const Indexing& idx, int up_to_level,
                                std::int64_t level_cap) {
  const int beta = idx.beta();
  if (up_to_level < 0 || up_to_level > d.max_level())
    throw ValidationError("canonicalize: level out of range");

  std::int64_t width = 1;
  for (int n = 0; n <= up_to_level; ++n) {
    if (width > level_cap / std::max<std::int64_t>(1, d.level_size(n)))
      throw CapExceededError("canonicalize: beta^" + std::to_string(n) +
                             " * |V_" + std::to_string(n) + "| exceeds cap");
    if (n < up_to_level) width *= beta;
  }

  CanonicalImage img;
  img.eta.resize(up_to_level + 1);
  img.eta[0].resize(d.level_size(0));
  for (std::int32_t k = 0; k < d.level_size(0); ++k) img.eta[0][k] = {k};
  for (int n = 1; n <= up_to_level; ++n) {
    img.eta[n].resize(d.level_size(n));
    for (std::int32_t k = 0; k < d.level_size(n); ++k) {
      auto& s = img.eta[n][k];
      for (std::int32_t child : idx.tuple(n, k)) {
        const auto& part = img.eta[n - 1][child];
        s.insert(s.end(), part.begin(), part.end());
      }
    }
  }

  // Assemble the image diagram: same ordinals, string labels, multisets
  // carried over through eta (which preserves them with multiplicity).
  std::vector<std::vector<std::string>> labels(up_to_level + 1);
  std::vector<std::vector<Multiset>> multisets(up_to_level);
  for (int n = 0; n <= up_to_level; ++n) {
    labels[n].resize(d.level_size(n));
    for (std::int32_t k = 0; k < d.level_size(n); ++k)
      labels[n][k] = img.render(d, n, k);
    if (n >= 1) {
      multisets[n - 1].resize(d.level_size(n));
      for (std::int32_t k = 0; k < d.level_size(n); ++k)
        multisets[n - 1][k] = d.multiset(n, k);
    }
  }
  return {std::move(img), Diagram::build(std::move(labels), std::move(multisets))};
}

Diagram canonical_diagram(const std::vector<std::string>& alphabet, int beta, int max_level,
                          std::int64_t level_cap) {
  if (alphabet.empty()) throw ValidationError("canonical_diagram: empty alphabet");
  if (beta < 2) throw ValidationError("canonical_diagram: beta must be >= 2");
  const auto m = static_cast<std::int64_t>(alphabet.size());

  // Level sizes |A|^(beta^n) explode doubly exponentially; refuse early.
  std::vector<std::int64_t> sizes;
  std::int64_t width = 1;
  for (int n = 0; n <= max_level; ++n) {
    std::int64_t s = 1;
    for (std::int64_t i = 0; i < width && m > 1; ++i) {
      if (s > level_cap / m)
        throw CapExceededError("canonical_diagram: level " + std::to_string(n) +
                               " exceeds the vertex cap");
      s *= m;
    }
    sizes.push_back(s);
    if (n < max_level) {
      if (width > level_cap / beta)
        throw CapExceededError("canonical_diagram: string length at level " +
                               std::to_string(n + 1) + " exceeds the cap");
      width *= beta;
    }
  }

  std::vector<std::vector<std::string>> labels(max_level + 1);
  std::vector<std::vector<Multiset>> multisets(std::max(0, max_level));
  width = 1;
  for (int n = 0; n <= max_level; ++n) {
    const std::int64_t count = sizes[n];
    labels[n].resize(count);
    // String of rank r = base-m digits of r, most significant symbol first,
    // so lexicographic order of strings is numeric order of ranks.
    std::vector<std::int64_t> digits(static_cast<std::size_t>(width));
    for (std::int64_t r = 0; r < count; ++r) {
      std::int64_t v = r;
      for (std::int64_t pos = width - 1; pos >= 0; --pos) {
        digits[static_cast<std::size_t>(pos)] = v % m;
        v /= m;
      }
      std::string s;
      for (std::int64_t dgt : digits) s += alphabet[static_cast<std::size_t>(dgt)];
      labels[n][r] = std::move(s);
    }
    if (n >= 1) {
      multisets[n - 1].resize(count);
      // Slice i of string-rank r has rank (r / m^((beta-1-i)*w)) mod m^w
      // where w = beta^(n-1).
      const std::int64_t slice_size = sizes[n - 1];
      for (std::int64_t r = 0; r < count; ++r) {
        Multiset& ms = multisets[n - 1][r];
        std::int64_t v = r;
        for (int i = beta - 1; i >= 0; --i) {
          ms[static_cast<std::int32_t>(v % slice_size)] += 1;
          v /= slice_size;
        }
      }
    }
    if (n < max_level) width *= beta;
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

Diagram example_two_vertex_diagram(int max_level) {
  std::vector<std::vector<std::string>> labels(max_level + 1);
  std::vector<std::vector<Multiset>> multisets(std::max(0, max_level));
  for (int n = 0; n <= max_level; ++n) {
    labels[n] = {"v0(" + std::to_string(n) + ")", "v1(" + std::to_string(n) + ")"};
    if (n >= 1) multisets[n - 1] = {Multiset{{0, 1}, {1, 1}}, Multiset{{0, 1}, {1, 1}}};
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

Diagram example_pascal_diagram(int max_level) {
  std::vector<std::vector<std::string>> labels(max_level + 1);
  std::vector<std::vector<Multiset>> multisets(std::max(0, max_level));
  for (int n = 0; n <= max_level; ++n) {
    labels[n].resize(n + 2);
    for (int i = 0; i <= n + 1; ++i)
      labels[n][i] = "v" + std::to_string(i) + "(" + std::to_string(n) + ")";
    if (n >= 1) {
      multisets[n - 1].resize(n + 2);
      multisets[n - 1][0] = Multiset{{0, 2}};
      for (int i = 1; i <= n; ++i)
        multisets[n - 1][i] = Multiset{{i - 1, 1}, {i, 1}};
      multisets[n - 1][n + 1] = Multiset{{n, 2}};
    }
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

Diagram example_pascal_labeled() {
  Diagram d = example_pascal_diagram(3);
  std::vector<std::vector<std::string>> labels = {
      {"a", "b"}, {"c", "d", "e"}, {"f", "g", "h", "i"}, {"j", "k", "l", "m", "n"}};
  std::vector<std::vector<Multiset>> multisets;
  for (int n = 1; n <= 3; ++n) {
    std::vector<Multiset> ms;
    for (std::int32_t k = 0; k < d.level_size(n); ++k) ms.push_back(d.multiset(n, k));
    multisets.push_back(std::move(ms));
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

}  // namespace bratteli
