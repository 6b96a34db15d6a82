#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/pmf.hpp"

namespace bratteli {

// Binary codeword as a '0'/'1' string.
using Bits = std::string;

// One-to-one prefix-free codeword map on one level's vertex set.
struct PrefixCode {
  int order = 0;  // level the code lives on
  int beta = 2;   // branching of the underlying diagram (for rates)
  std::vector<Bits> words;

  // Validates injectivity and the prefix condition.
  static PrefixCode make(int order, int beta, std::vector<Bits> words);
};

// Exact sum of powers 2^{-l}; compares against 1 without rounding.
class DyadicSum {
 public:
  void add_pow2_neg(std::size_t l);
  bool is_one() const;
  double value() const;
  // "1", "3/4", ... (decimal fallback for very long denominators).
  std::string to_string() const;

 private:
  std::uint64_t whole_ = 0;
  std::vector<std::uint8_t> frac_;  // frac_[i] = coefficient of 2^{-(i+1)}
};

DyadicSum kraft_sum(const PrefixCode& c);
inline bool is_proper(const PrefixCode& c) { return kraft_sum(c).is_one(); }

// Expected codeword length under p; requires matching sizes.
double average_length(const PrefixCode& c, const Pmf& p);
// beta^{-order} times the expected length (compression rate per level-0 symbol).
double rate(const PrefixCode& c, const Pmf& p);
// Expected length minus entropy; nonnegative.
double redundancy(const PrefixCode& c, const Pmf& p);

inline constexpr double kHuffmanSmoothing = 0x1.0p-20;

// Huffman code for p over the whole vertex set. Zero-probability vertices
// are covered by building the tree for (1-eta) p + eta uniform; merges are
// tie-broken by node id, so the output is deterministic.
PrefixCode huffman(const Pmf& p, int beta, double eta = kHuffmanSmoothing);

// Ordinal-level access to the beta-decomposition of a diagram's vertices.
class LevelDecomposition {
 public:
  virtual ~LevelDecomposition() = default;
  virtual int beta() const = 0;
  virtual int max_level() const = 0;
  virtual std::int32_t level_size(int level) const = 0;
  virtual std::int32_t child(int level, std::int32_t ordinal, int digit) const = 0;
};

// Decomposition read off an indexed regular diagram.
class DiagramDecomposition : public LevelDecomposition {
 public:
  DiagramDecomposition(std::shared_ptr<const Diagram> d, std::shared_ptr<const Indexing> idx)
      : diagram_(std::move(d)), indexing_(std::move(idx)) {}

  int beta() const override { return indexing_->beta(); }
  int max_level() const override { return diagram_->max_level(); }
  std::int32_t level_size(int level) const override { return diagram_->level_size(level); }
  std::int32_t child(int level, std::int32_t ordinal, int digit) const override {
    return indexing_->child(level, ordinal, digit);
  }
  const Diagram& diagram() const { return *diagram_; }

 private:
  std::shared_ptr<const Diagram> diagram_;
  std::shared_ptr<const Indexing> indexing_;
};

// Lifted encoder: the level-(n+1) codeword is the concatenation of c over
// the vertex's decomposition. Preserves rate: R(lift(c), lambda) =
// R(c, transport(lambda)).
PrefixCode lift(const PrefixCode& c, const LevelDecomposition& levels);

// Best-of-J combination: a ceil(log2 J)-bit header (big-endian index of the
// selected code) followed by the shortest member codeword; ties pick the
// smallest index. Requires J >= 2.
PrefixCode combine(const std::vector<const PrefixCode*>& codes);

inline constexpr int kEnumerationLevelCap = 8;

// Lazy enumeration of the proper encoders (Kraft sum exactly 1), level by
// level. Within a level, length profiles are visited in lexicographic order
// (as non-decreasing sequences) and, per profile, vertices are matched to
// the canonical codebook in every permutation, again lexicographically.
// CapExceeded once levels larger than level_cap (or lengths beyond
// length_cap) would be needed.
class ProperEncoderEnumerator {
 public:
  explicit ProperEncoderEnumerator(std::shared_ptr<const LevelDecomposition> levels,
                                   int level_cap = kEnumerationLevelCap, int length_cap = -1);

  // psi_i, 0-based; generates on demand.
  const PrefixCode& at(std::size_t i);

 private:
  bool advance();  // appends the next encoder; false when exhausted

  std::shared_ptr<const LevelDecomposition> levels_;
  int level_cap_;
  int length_cap_;
  std::vector<PrefixCode> generated_;

  // Iteration state.
  int level_ = 0;
  bool level_open_ = false;
  std::vector<std::vector<int>> profiles_;  // non-decreasing length profiles
  std::size_t profile_idx_ = 0;
  std::vector<Bits> codebook_;              // canonical words of current profile
  std::vector<std::int32_t> perm_;          // vertex -> codebook index
  bool perm_fresh_ = false;
};

// All proper (Kraft = 1) length profiles on m symbols as non-decreasing
// sequences with lengths <= max_len, lexicographically ordered.
std::vector<std::vector<int>> proper_length_profiles(int m, int max_len);

// Canonical codebook realizing a non-decreasing length profile.
std::vector<Bits> canonical_codebook(const std::vector<int>& lengths);

// Upper-triangular encoder family: diagonal seeds are the enumerated proper
// encoders lifted to order i-1, and off-diagonal entries lift the diagonal.
class EncoderArray {
 public:
  explicit EncoderArray(std::shared_ptr<const LevelDecomposition> levels,
                        int level_cap = kEnumerationLevelCap, int length_cap = -1);

  // phi_{i,j} for j >= i >= 1; ORD(phi_{i,j}) = j-1.
  const PrefixCode& entry(std::size_t i, std::size_t j);
  const PrefixCode& diagonal(std::size_t i) { return entry(i, i); }

  // tau_n: combination of column n+1. The single-entry column at n = 0
  // degenerates to phi_{1,1} itself (no header).
  PrefixCode tau(int n);

 private:
  std::shared_ptr<const LevelDecomposition> levels_;
  ProperEncoderEnumerator enumeration_;
  std::map<std::pair<std::size_t, std::size_t>, PrefixCode> cache_;
};

// Decoding. The trie is built once per code and reused.
class Decoder {
 public:
  explicit Decoder(const PrefixCode& c);

  // Decodes one codeword starting at `pos`, advancing it.
  std::int32_t decode_one(const Bits& bits, std::size_t& pos) const;
  // Decodes exactly one codeword consuming the whole input.
  std::int32_t decode(const Bits& bits) const;
  // Decodes a concatenation of `count` codewords consuming the whole input.
  std::vector<std::int32_t> decode_sequence(const Bits& bits, std::size_t count) const;

 private:
  struct Node {
    std::int32_t next[2] = {-1, -1};
    std::int32_t terminal = -1;
  };
  std::vector<Node> nodes_;
};

// Encoder on words over an alphabet of size m, assembled from level codes of
// the canonical diagram: a word of length k is factored along the decreasing
// powers of two summing to k and each factor is coded at the matching order.
class SequentialScheme {
 public:
  // code_for_order(n) must return a prefix code on the m^(2^n) strings of
  // length 2^n (lexicographic vertex order), or nullopt if unavailable.
  SequentialScheme(std::int64_t alphabet_size,
                   std::function<std::optional<PrefixCode>(int order)> code_for_order);

  // Decreasing powers of two summing to k.
  static std::vector<std::int64_t> power_decomposition(std::int64_t k);

  Bits encode(const std::vector<std::int32_t>& word) const;
  std::vector<std::int32_t> decode(const Bits& bits, std::int64_t k) const;

 private:
  struct OrderCode {
    PrefixCode code;
    Decoder decoder;
  };
  const OrderCode& order_code(int order) const;

  std::int64_t m_;
  std::function<std::optional<PrefixCode>(int order)> provider_;
  mutable std::map<int, OrderCode> cache_;
};

}  // namespace bratteli
