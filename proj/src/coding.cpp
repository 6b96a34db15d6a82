#include "bratteli/coding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace bratteli {

namespace {

// Sorted words: any prefix relation shows up between lexicographic neighbors.
void validate_code_words(const std::vector<Bits>& words) {
  if (words.empty()) throw ValidationError("prefix code: no codewords");
  std::vector<const Bits*> sorted;
  sorted.reserve(words.size());
  for (const Bits& w : words) {
    if (w.empty()) throw ValidationError("prefix code: empty codeword");
    for (char c : w)
      if (c != '0' && c != '1') throw ValidationError("prefix code: non-binary codeword");
    sorted.push_back(&w);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Bits* a, const Bits* b) { return *a < *b; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const Bits& a = *sorted[i];
    const Bits& b = *sorted[i + 1];
    if (a.size() <= b.size() && b.compare(0, a.size(), a) == 0)
      throw ValidationError(a == b ? "prefix code: duplicate codeword '" + a + "'"
                                   : "prefix code: '" + a + "' is a prefix of '" + b + "'");
  }
}

}  // namespace

PrefixCode PrefixCode::make(int order, int beta, std::vector<Bits> words) {
  validate_code_words(words);
  PrefixCode c;
  c.order = order;
  c.beta = beta;
  c.words = std::move(words);
  return c;
}

void DyadicSum::add_pow2_neg(std::size_t l) {
  if (l == 0) {
    ++whole_;
    return;
  }
  if (frac_.size() < l) frac_.resize(l, 0);
  std::size_t i = l - 1;
  while (true) {
    if (frac_[i] == 0) {
      frac_[i] = 1;
      break;
    }
    frac_[i] = 0;  // carry up
    if (i == 0) {
      ++whole_;
      break;
    }
    --i;
  }
}

bool DyadicSum::is_one() const {
  if (whole_ != 1) return false;
  return std::all_of(frac_.begin(), frac_.end(), [](std::uint8_t d) { return d == 0; });
}

double DyadicSum::value() const {
  double v = static_cast<double>(whole_);
  double w = 0.5;
  for (std::uint8_t d : frac_) {
    if (d) v += w;
    w *= 0.5;
  }
  return v;
}

std::string DyadicSum::to_string() const {
  std::size_t last = frac_.size();
  while (last > 0 && frac_[last - 1] == 0) --last;
  if (last == 0) return std::to_string(whole_);
  if (last <= 62) {
    std::uint64_t num = 0;
    for (std::size_t i = 0; i < last; ++i) num = (num << 1) | frac_[i];
    num += whole_ << last;
    return std::to_string(num) + "/" + std::to_string(std::uint64_t{1} << last);
  }
  return std::to_string(value());
}

DyadicSum kraft_sum(const PrefixCode& c) {
  DyadicSum s;
  for (const Bits& w : c.words) s.add_pow2_neg(w.size());
  return s;
}

double average_length(const PrefixCode& c, const Pmf& p) {
  if (c.words.size() != p.size())
    throw LevelMismatchError("average_length: code and PMF sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    acc += p[i] * static_cast<double>(c.words[i].size());
  return acc;
}

double rate(const PrefixCode& c, const Pmf& p) {
  return std::pow(static_cast<double>(c.beta), -c.order) * average_length(c, p);
}

double redundancy(const PrefixCode& c, const Pmf& p) {
  return average_length(c, p) - entropy_bits(p);
}

PrefixCode huffman(const Pmf& p, int beta, double eta) {
  const std::size_t m = p.size();
  if (m == 1) return PrefixCode::make(p.level(), beta, {"0"});

  // Smoothed tree weights; the reported code still covers p itself.
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i)
    w[i] = (1.0 - eta) * p[i] + eta / static_cast<double>(m);

  struct Item {
    double weight;
    std::size_t id;
    bool operator>(const Item& o) const {
      if (weight != o.weight) return weight > o.weight;
      return id > o.id;  // stable merges: older nodes first
    }
  };
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::vector<std::int64_t> parent(2 * m - 1, -1);
  std::vector<char> bit(2 * m - 1, 0);
  for (std::size_t i = 0; i < m; ++i) heap.push({w[i], i});
  std::size_t next_id = m;
  while (heap.size() > 1) {
    const Item a = heap.top();
    heap.pop();
    const Item b = heap.top();
    heap.pop();
    parent[a.id] = static_cast<std::int64_t>(next_id);
    bit[a.id] = '0';
    parent[b.id] = static_cast<std::int64_t>(next_id);
    bit[b.id] = '1';
    heap.push({a.weight + b.weight, next_id});
    ++next_id;
  }

  std::vector<Bits> words(m);
  for (std::size_t i = 0; i < m; ++i) {
    Bits rev;
    for (std::int64_t node = static_cast<std::int64_t>(i); parent[node] != -1;
         node = parent[node])
      rev += bit[node];
    words[i].assign(rev.rbegin(), rev.rend());
  }
  PrefixCode code = PrefixCode::make(p.level(), beta, std::move(words));

  // Sanity gate on the expected length: optimality of the smoothed tree
  // keeps it within one bit of the entropy plus the smoothing overhead.
  const double bound = entropy_bits(p) + 1.0 +
                       eta * std::log2(static_cast<double>(m)) + 1e-4;
  if (average_length(code, p) > bound)
    throw ValidationError("huffman: expected length exceeded its bound");
  return code;
}

PrefixCode lift(const PrefixCode& c, const LevelDecomposition& levels) {
  const int beta = levels.beta();
  const int upper = c.order + 1;
  if (upper > levels.max_level())
    throw LevelMismatchError("lift: no level above order " + std::to_string(c.order));
  if (static_cast<std::int32_t>(c.words.size()) != levels.level_size(c.order))
    throw LevelMismatchError("lift: code does not cover its level");
  const std::int32_t count = levels.level_size(upper);
  std::vector<Bits> words(static_cast<std::size_t>(count));
  for (std::int32_t x = 0; x < count; ++x) {
    Bits w;
    for (int i = 0; i < beta; ++i)
      w += c.words[static_cast<std::size_t>(levels.child(upper, x, i))];
    words[static_cast<std::size_t>(x)] = std::move(w);
  }
  return PrefixCode::make(upper, beta, std::move(words));
}

PrefixCode combine(const std::vector<const PrefixCode*>& codes) {
  const std::size_t J = codes.size();
  if (J < 2) throw ValidationError("combine: needs at least two codes");
  const std::size_t m = codes.front()->words.size();
  for (const PrefixCode* c : codes) {
    if (c->order != codes.front()->order || c->words.size() != m)
      throw LevelMismatchError("combine: codes live on different levels");
  }
  std::size_t header = 0;
  while ((std::size_t{1} << header) < J) ++header;

  std::vector<Bits> words(m);
  for (std::size_t s = 0; s < m; ++s) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < J; ++j)
      if (codes[j]->words[s].size() < codes[best]->words[s].size()) best = j;
    Bits w;
    for (std::size_t b = header; b > 0; --b) w += ((best >> (b - 1)) & 1) ? '1' : '0';
    w += codes[best]->words[s];
    words[s] = std::move(w);
  }
  return PrefixCode::make(codes.front()->order, codes.front()->beta, std::move(words));
}

std::vector<std::vector<int>> proper_length_profiles(int m, int max_len) {
  // Depth-first over non-decreasing lengths, tracking the remaining Kraft
  // capacity in integer units of 2^{-max_len}.
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  const std::int64_t unit_budget = std::int64_t{1} << max_len;
  auto rec = [&](auto&& self, int remaining_symbols, std::int64_t remaining_units,
                 int min_len) -> void {
    if (remaining_symbols == 0) {
      if (remaining_units == 0) out.push_back(cur);
      return;
    }
    for (int l = min_len; l <= max_len; ++l) {
      const std::int64_t units = std::int64_t{1} << (max_len - l);
      if (units * remaining_symbols < remaining_units) break;  // cannot fill up anymore
      if (units > remaining_units) continue;
      cur.push_back(l);
      self(self, remaining_symbols - 1, remaining_units - units, l);
      cur.pop_back();
    }
  };
  if (max_len >= 1 && max_len <= 62) rec(rec, m, unit_budget, 1);
  return out;
}

std::vector<Bits> canonical_codebook(const std::vector<int>& lengths) {
  std::vector<Bits> words;
  words.reserve(lengths.size());
  std::uint64_t next = 0;
  int prev_len = 0;
  for (int l : lengths) {
    next <<= (l - prev_len);
    Bits w;
    for (int b = l; b > 0; --b) w += ((next >> (b - 1)) & 1) ? '1' : '0';
    words.push_back(std::move(w));
    ++next;
    prev_len = l;
  }
  return words;
}

ProperEncoderEnumerator::ProperEncoderEnumerator(
    std::shared_ptr<const LevelDecomposition> levels, int level_cap, int length_cap)
    : levels_(std::move(levels)), level_cap_(level_cap), length_cap_(length_cap) {}

bool ProperEncoderEnumerator::advance() {
  while (true) {
    if (!level_open_) {
      if (level_ > levels_->max_level()) return false;
      const std::int32_t m = levels_->level_size(level_);
      if (m > level_cap_) return false;  // enumeration truncated at this level
      const int max_len = length_cap_ > 0 ? std::min(length_cap_, static_cast<int>(m))
                                          : static_cast<int>(m);
      profiles_ = proper_length_profiles(static_cast<int>(m), max_len);
      profile_idx_ = 0;
      level_open_ = true;
      perm_fresh_ = false;
    }
    const std::int32_t m = levels_->level_size(level_);
    if (profile_idx_ >= profiles_.size()) {
      level_open_ = false;
      ++level_;
      continue;
    }
    if (!perm_fresh_) {
      codebook_ = canonical_codebook(profiles_[profile_idx_]);
      perm_.resize(static_cast<std::size_t>(m));
      std::iota(perm_.begin(), perm_.end(), 0);
      perm_fresh_ = true;
    }
    // Emit the current permutation, then step it.
    std::vector<Bits> words(static_cast<std::size_t>(m));
    for (std::size_t v = 0; v < words.size(); ++v)
      words[v] = codebook_[static_cast<std::size_t>(perm_[v])];
    generated_.push_back(PrefixCode::make(level_, levels_->beta(), std::move(words)));
    if (!std::next_permutation(perm_.begin(), perm_.end())) {
      ++profile_idx_;
      perm_fresh_ = false;
    }
    return true;
  }
}

const PrefixCode& ProperEncoderEnumerator::at(std::size_t i) {
  while (generated_.size() <= i) {
    if (!advance())
      throw CapExceededError("encoder enumeration exhausted within the level cap");
  }
  return generated_[i];
}

EncoderArray::EncoderArray(std::shared_ptr<const LevelDecomposition> levels, int level_cap,
                           int length_cap)
    : levels_(levels), enumeration_(levels, level_cap, length_cap) {}

const PrefixCode& EncoderArray::entry(std::size_t i, std::size_t j) {
  if (i < 1 || j < i) throw ValidationError("EncoderArray: needs j >= i >= 1");
  const auto key = std::make_pair(i, j);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  if (i == j) {
    // Diagonal seed: the (i-1)-th enumerated encoder lifted to order i-1.
    PrefixCode seed = enumeration_.at(i - 1);
    while (seed.order < static_cast<int>(i) - 1) seed = lift(seed, *levels_);
    return cache_.emplace(key, std::move(seed)).first->second;
  }
  PrefixCode lifted = lift(entry(i, j - 1), *levels_);
  return cache_.emplace(key, std::move(lifted)).first->second;
}

PrefixCode EncoderArray::tau(int n) {
  if (n < 0) throw ValidationError("tau: negative order");
  const auto col = static_cast<std::size_t>(n) + 1;
  if (col == 1) return entry(1, 1);  // single-code column: no header
  std::vector<const PrefixCode*> column;
  column.reserve(col);
  for (std::size_t i = 1; i <= col; ++i) column.push_back(&entry(i, col));
  return combine(column);
}

Decoder::Decoder(const PrefixCode& c) {
  nodes_.emplace_back();
  for (std::size_t v = 0; v < c.words.size(); ++v) {
    std::int32_t node = 0;
    for (char ch : c.words[v]) {
      const int b = ch - '0';
      if (nodes_[static_cast<std::size_t>(node)].next[b] == -1) {
        nodes_[static_cast<std::size_t>(node)].next[b] =
            static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[static_cast<std::size_t>(node)].next[b];
    }
    nodes_[static_cast<std::size_t>(node)].terminal = static_cast<std::int32_t>(v);
  }
}

std::int32_t Decoder::decode_one(const Bits& bits, std::size_t& pos) const {
  std::int32_t node = 0;
  while (true) {
    const Node& cur = nodes_[static_cast<std::size_t>(node)];
    if (cur.terminal != -1) return cur.terminal;
    if (pos >= bits.size()) throw TruncatedInputError("decode: input ended mid-codeword");
    const char ch = bits[pos++];
    if (ch != '0' && ch != '1') throw InvalidCodewordError("decode: non-binary input");
    node = cur.next[ch - '0'];
    if (node == -1) throw InvalidCodewordError("decode: no codeword along this bit path");
  }
}

std::int32_t Decoder::decode(const Bits& bits) const {
  std::size_t pos = 0;
  const std::int32_t v = decode_one(bits, pos);
  if (pos != bits.size()) throw InvalidCodewordError("decode: trailing bits after codeword");
  return v;
}

std::vector<std::int32_t> Decoder::decode_sequence(const Bits& bits, std::size_t count) const {
  std::vector<std::int32_t> out;
  out.reserve(count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) out.push_back(decode_one(bits, pos));
  if (pos != bits.size())
    throw InvalidCodewordError("decode: trailing bits after last codeword");
  return out;
}

SequentialScheme::SequentialScheme(
    std::int64_t alphabet_size, std::function<std::optional<PrefixCode>(int order)> code_for_order)
    : m_(alphabet_size), provider_(std::move(code_for_order)) {
  if (m_ < 1) throw ValidationError("SequentialScheme: empty alphabet");
}

std::vector<std::int64_t> SequentialScheme::power_decomposition(std::int64_t k) {
  if (k < 1) throw ValidationError("power_decomposition: k must be positive");
  std::vector<std::int64_t> parts;
  for (int b = 62; b >= 0; --b) {
    const std::int64_t p = std::int64_t{1} << b;
    if (k & p) parts.push_back(p);
  }
  return parts;
}

const SequentialScheme::OrderCode& SequentialScheme::order_code(int order) const {
  auto it = cache_.find(order);
  if (it == cache_.end()) {
    std::optional<PrefixCode> c = provider_(order);
    if (!c)
      throw MissingOrderError("sequential scheme: no code of order " + std::to_string(order));
    Decoder dec(*c);
    it = cache_.emplace(order, OrderCode{std::move(*c), std::move(dec)}).first;
  }
  return it->second;
}

Bits SequentialScheme::encode(const std::vector<std::int32_t>& word) const {
  const auto k = static_cast<std::int64_t>(word.size());
  Bits out;
  std::size_t offset = 0;
  for (std::int64_t part : power_decomposition(k)) {
    int order = 0;
    while ((std::int64_t{1} << order) < part) ++order;
    const OrderCode& oc = order_code(order);
    // Rank of the factor in lexicographic order.
    std::int64_t ranked = 0;
    for (std::int64_t i = 0; i < part; ++i) {
      const std::int32_t sym = word[offset + static_cast<std::size_t>(i)];
      if (sym < 0 || sym >= m_) throw RangeError("encode: symbol outside the alphabet");
      ranked = ranked * m_ + sym;
    }
    out += oc.code.words[static_cast<std::size_t>(ranked)];
    offset += static_cast<std::size_t>(part);
  }
  return out;
}

std::vector<std::int32_t> SequentialScheme::decode(const Bits& bits, std::int64_t k) const {
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(k));
  std::size_t pos = 0;
  for (std::int64_t part : power_decomposition(k)) {
    int order = 0;
    while ((std::int64_t{1} << order) < part) ++order;
    const OrderCode& oc = order_code(order);
    std::int64_t ranked = oc.decoder.decode_one(bits, pos);
    std::vector<std::int32_t> factor(static_cast<std::size_t>(part));
    for (std::int64_t i = part - 1; i >= 0; --i) {
      factor[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(ranked % m_);
      ranked /= m_;
    }
    out.insert(out.end(), factor.begin(), factor.end());
  }
  if (pos != bits.size())
    throw InvalidCodewordError("decode: trailing bits after last factor");
  return out;
}

}  // namespace bratteli
