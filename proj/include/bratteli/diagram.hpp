#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/errors.hpp"

namespace bratteli {

// Multiset over the previous level's vertex ordinals: ordinal -> multiplicity.
using Multiset = std::map<std::int32_t, std::int32_t>;

inline std::int64_t multiset_cardinality(const Multiset& m) {
  std::int64_t c = 0;
  for (const auto& [v, mult] : m) c += mult;
  return c;
}

// Number of distinct orderings of a multiset, |M|! / prod m(s|M)!,
// saturating at 2^63-1 for very large multisets.
std::uint64_t multiset_orderings_count(const Multiset& m);

// Finite truncation of a leveled graph whose edges connect consecutive
// levels only. Vertices are identified by (level, ordinal); labels are
// cosmetic. Structure is stored as per-vertex multisets of source vertices,
// which determines the edge set up to isomorphism.
class Diagram {
 public:
  // levels[n] = labels of the level-n vertices; multisets[n-1][k] = multiset
  // of level-(n-1) ordinals feeding vertex k of level n (n >= 1).
  // Enforces: nonempty levels, nonempty multisets, no orphan vertices
  // (every vertex below the top level is the source of some edge).
  static Diagram build(std::vector<std::vector<std::string>> level_labels,
                       std::vector<std::vector<Multiset>> multisets);

  int max_level() const { return static_cast<int>(labels_.size()) - 1; }
  std::int32_t level_size(int n) const { return static_cast<std::int32_t>(labels_[n].size()); }
  const std::string& label(int level, std::int32_t ordinal) const {
    return labels_[level][ordinal];
  }
  // Multiset feeding vertex `ordinal` of `level` (level >= 1).
  const Multiset& multiset(int level, std::int32_t ordinal) const {
    return multisets_[level - 1][ordinal];
  }
  // |E(v)|, edges entering the vertex.
  std::int64_t in_degree(int level, std::int32_t ordinal) const {
    return multiset_cardinality(multiset(level, ordinal));
  }

  // Common in-degree if every vertex above level 0 has the same one.
  std::optional<int> uniform_beta() const;

  std::string vertex_name(int level, std::int32_t ordinal) const;

 private:
  Diagram() = default;
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::vector<Multiset>> multisets_;
};

// Outcome of the two-part regularity test: every in-degree equals beta, and
// no multiset value is shared by more vertices than it has orderings.
struct RegularityReport {
  bool regular = false;
  std::string violation;                     // empty when regular
  int level = -1;                            // first offending vertex, if any
  std::int32_t ordinal = -1;
};

RegularityReport check_regular(const Diagram& d, int beta);

// Edge indexing: for each vertex above level 0, an ordered beta-tuple listing
// its multiset. Tuples of distinct vertices in the same level are distinct.
class Indexing {
 public:
  // Deterministic construction for a regular diagram: vertices of each level
  // are grouped by multiset value; the k-th member of a group (in ordinal
  // order) receives the k-th lexicographically smallest distinct ordering of
  // the multiset. Throws NotRegularError if the diagram is not beta-regular.
  static Indexing build(const Diagram& d, int beta);

  int beta() const { return beta_; }
  // Ordered children (level-(n-1) ordinals) of vertex `ordinal` at `level`.
  const std::vector<std::int32_t>& tuple(int level, std::int32_t ordinal) const {
    return tuples_[level - 1][ordinal];
  }
  std::int32_t child(int level, std::int32_t ordinal, int digit) const {
    return tuples_[level - 1][ordinal][digit];
  }

 private:
  int beta_ = 0;
  std::vector<std::vector<std::vector<std::int32_t>>> tuples_;
};

// Image of each vertex under the canonicalizing map: a string over V_0
// ordinals of length beta^level, satisfying the concatenation identity
// eta(v) = eta(v[0]) eta(v[1]) ... eta(v[beta-1]).
struct CanonicalImage {
  // eta[n][ordinal] = level-0 ordinal string of length beta^n.
  std::vector<std::vector<std::vector<std::int32_t>>> eta;

  // Rendered with the diagram's level-0 labels, e.g. "aaababbb".
  std::string render(const Diagram& d, int level, std::int32_t ordinal) const;
};

struct CanonicalizeResult {
  CanonicalImage image;
  Diagram canonical;  // levels 0..up_to_level; vertices labeled by eta strings
};

inline constexpr std::int64_t kDefaultLevelCap = 1 << 20;

// Computes eta strings up to `up_to_level` and assembles the isomorphic
// canonical diagram. The memory guard rejects levels whose total string
// storage would exceed the cap.
CanonicalizeResult canonicalize(const Diagram& d, const Indexing& idx, int up_to_level,
                                std::int64_t level_cap = kDefaultLevelCap);

// The canonical diagram on alphabet `alphabet`: level n holds all strings of
// length beta^n (lexicographic order), each feeding from its beta equal
// slices. Levels are materialized up to max_level, guarded by the cap.
Diagram canonical_diagram(const std::vector<std::string>& alphabet, int beta, int max_level,
                          std::int64_t level_cap = kDefaultLevelCap);

// The two running examples: a two-vertex-per-level diagram where every
// vertex feeds from both predecessors, and the Pascal-triangle diagram.
Diagram example_two_vertex_diagram(int max_level);
Diagram example_pascal_diagram(int max_level);

// Pascal diagram with vertices labeled a, b, c, ... left-to-right, top level 3.
Diagram example_pascal_labeled();

}  // namespace bratteli
