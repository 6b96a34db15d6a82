#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bratteli/coding.hpp"
#include "bratteli/rng.hpp"
#include "bratteli/source.hpp"
#include "bratteli/stats.hpp"

using namespace bratteli;

namespace {

std::shared_ptr<const DiagramDecomposition> canonical_levels(int max_level) {
  auto d = std::make_shared<const Diagram>(canonical_diagram({"a", "b"}, 2, max_level));
  auto idx = std::make_shared<const Indexing>(Indexing::build(*d, 2));
  return std::make_shared<DiagramDecomposition>(std::move(d), std::move(idx));
}

std::vector<int> lengths_of(const PrefixCode& c) {
  std::vector<int> out;
  for (const Bits& w : c.words) out.push_back(static_cast<int>(w.size()));
  return out;
}

// Independent oracle: the best expected length over every proper code on m
// symbols, by profile enumeration and assignment search.
double best_average_length(const Pmf& p) {
  const int m = static_cast<int>(p.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& profile : proper_length_profiles(m, m)) {
    std::vector<int> assign = profile;
    std::sort(assign.begin(), assign.end());
    do {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += p[static_cast<std::size_t>(i)] * assign[static_cast<std::size_t>(i)];
      best = std::min(best, acc);
    } while (std::next_permutation(assign.begin(), assign.end()));
  }
  return best;
}

std::vector<double> random_pmf(std::size_t m, Rng& rng) {
  std::vector<double> p(m);
  double total = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.next_double());
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

// Random proper code on m symbols: random proper profile, random assignment.
PrefixCode random_proper_code(int order, int m, Rng& rng) {
  const auto profiles = proper_length_profiles(m, m);
  const auto& profile = profiles[rng.next_below(profiles.size())];
  auto words = canonical_codebook(profile);
  for (std::size_t i = words.size(); i > 1; --i)
    std::swap(words[i - 1], words[rng.next_below(i)]);
  return PrefixCode::make(order, 2, std::move(words));
}

}  // namespace

TEST_CASE("prefix code validation") {
  CHECK_THROWS_AS(PrefixCode::make(0, 2, {"0", "00"}), ValidationError);
  CHECK_THROWS_AS(PrefixCode::make(0, 2, {"0", "0"}), ValidationError);
  CHECK_THROWS_AS(PrefixCode::make(0, 2, {"0", ""}), ValidationError);
  CHECK_NOTHROW(PrefixCode::make(0, 2, {"0", "10", "11"}));
}

TEST_CASE("kraft sums are exact") {
  const auto proper = PrefixCode::make(0, 2, {"0", "10", "11"});
  CHECK(kraft_sum(proper).to_string() == "1");
  CHECK(is_proper(proper));

  const auto gap = PrefixCode::make(0, 2, {"00", "01", "10"});
  CHECK(kraft_sum(gap).to_string() == "3/4");
  CHECK_FALSE(is_proper(gap));
  CHECK(kraft_sum(gap).value() == doctest::Approx(0.75));
}

TEST_CASE("huffman") {
  SUBCASE("dyadic PMF gets the exhaustively optimal lengths") {
    const Pmf p(0, {0.5, 0.25, 0.25});
    const PrefixCode c = huffman(p, 2);
    CHECK(lengths_of(c) == std::vector<int>{1, 2, 2});
    CHECK(average_length(c, p) == doctest::Approx(1.5));
    CHECK(average_length(c, p) == doctest::Approx(best_average_length(p)));
    CHECK(redundancy(c, p) == doctest::Approx(0.0));
  }

  SUBCASE("uniform pair") {
    const PrefixCode c = huffman(Pmf(0, {0.5, 0.5}), 2);
    CHECK(lengths_of(c) == std::vector<int>{1, 1});
  }

  SUBCASE("point mass stays within one bit plus smoothing") {
    const Pmf p(0, {0.0, 1.0, 0.0});
    const PrefixCode c = huffman(p, 2);
    CHECK(c.words.size() == 3);  // zero-probability vertices keep codewords
    CHECK(average_length(c, p) <= 1.0 + 1e-5);
  }

  SUBCASE("outputs are proper and beat the entropy bound on random PMFs") {
    Rng rng(3);
    for (int trial = 0; trial < 60; ++trial) {
      const Pmf p(0, random_pmf(2 + rng.next_below(7), rng));
      const PrefixCode c = huffman(p, 2);
      CHECK(is_proper(c));
      const double avg = average_length(c, p);
      CHECK(avg >= entropy_bits(p) - 1e-12);  // no code undercuts the entropy
      CHECK(avg <= entropy_bits(p) + 1.0 + 1e-5);
      CHECK(avg == doctest::Approx(best_average_length(p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("lift") {
  const auto levels = canonical_levels(3);
  const PrefixCode base = PrefixCode::make(0, 2, {"0", "1"});

  SUBCASE("lifting concatenates along the decomposition") {
    const PrefixCode up = lift(base, *levels);
    CHECK(up.order == 1);
    CHECK(up.words.size() == 4);
    CHECK(up.words[1] == "01");  // ab
    CHECK(up.words[2] == "10");  // ba
    for (const Bits& w : up.words) CHECK(w.size() == 2);
  }

  SUBCASE("rates are invariant under lifting") {
    Rng rng(17);
    const Diagram& d = levels->diagram();
    for (int trial = 0; trial < 50; ++trial) {
      const PrefixCode code = random_proper_code(0, 2, rng);
      const Pmf lambda(1, random_pmf(static_cast<std::size_t>(d.level_size(1)), rng));
      const PrefixCode lifted = lift(code, *levels);
      CHECK(std::fabs(rate(lifted, lambda) - rate(code, transport(d, lambda))) < 1e-12);
    }
  }

  SUBCASE("lifting preserves properness") {
    PrefixCode c = PrefixCode::make(0, 2, {"0", "10", "11"});
    auto d = std::make_shared<const Diagram>(canonical_diagram({"a", "b", "c"}, 2, 2));
    auto idx = std::make_shared<const Indexing>(Indexing::build(*d, 2));
    const DiagramDecomposition levels3(d, idx);
    for (int n = 0; n < 2; ++n) {
      c = lift(c, levels3);
      CHECK(is_proper(c));
    }
  }

  SUBCASE("lifting a dyadic-optimal code stays optimal for the product PMF") {
    // Dyadic symbol PMF: the base code hits the entropy exactly, and so does
    // its lift on the product measure (H multiplies across the product).
    const TableSource s =
        embed_sequential({"a", "b", "c"}, 2, iid_marginals({0.5, 0.25, 0.25}), 1);
    const PrefixCode base_opt = huffman(s.level_pmf(0), 2);
    REQUIRE(average_length(base_opt, s.level_pmf(0)) == doctest::Approx(1.5));
    auto d3 = std::make_shared<const Diagram>(canonical_diagram({"a", "b", "c"}, 2, 1));
    auto idx3 = std::make_shared<const Indexing>(Indexing::build(*d3, 2));
    const PrefixCode lifted = lift(base_opt, DiagramDecomposition(d3, idx3));
    const PrefixCode direct = huffman(s.level_pmf(1), 2);
    CHECK(average_length(lifted, s.level_pmf(1)) ==
          doctest::Approx(average_length(direct, s.level_pmf(1))).epsilon(1e-12));
    CHECK(average_length(lifted, s.level_pmf(1)) ==
          doctest::Approx(entropy_bits(s.level_pmf(1))).epsilon(1e-12));
  }
}

TEST_CASE("combine") {
  const PrefixCode a = PrefixCode::make(0, 2, {"0", "100", "101", "11"});
  const PrefixCode b = PrefixCode::make(0, 2, {"00", "01", "10", "11"});

  SUBCASE("header plus per-symbol minimum, exactly") {
    const PrefixCode c = combine({&a, &b});
    REQUIRE(c.words.size() == 4);
    for (std::size_t s = 0; s < 4; ++s)
      CHECK(c.words[s].size() ==
            1 + std::min(a.words[s].size(), b.words[s].size()));
    // Ties pick the smaller index: symbol 3 has equal lengths (2, 2).
    CHECK(c.words[3] == "0" + a.words[3]);
    CHECK(c.words[0] == "00");   // a wins with "0"
    CHECK(c.words[1] == "101");  // b wins with "01"
  }

  SUBCASE("at least two codes are required") {
    CHECK_THROWS_AS(combine({&a}), ValidationError);
  }

  SUBCASE("the combination is itself prefix-free and decodable") {
    const PrefixCode c = combine({&a, &b});
    const Decoder dec(c);
    for (std::size_t s = 0; s < c.words.size(); ++s)
      CHECK(dec.decode(c.words[s]) == static_cast<std::int32_t>(s));
  }
}

TEST_CASE("proper encoder enumeration") {
  SUBCASE("profiles for four symbols") {
    const auto profiles = proper_length_profiles(4, 4);
    REQUIRE(profiles.size() == 2);
    CHECK(profiles[0] == std::vector<int>{1, 2, 3, 3});
    CHECK(profiles[1] == std::vector<int>{2, 2, 2, 2});
  }

  SUBCASE("two symbols admit exactly two proper encoders per level") {
    auto d = std::make_shared<const Diagram>(example_two_vertex_diagram(2));
    auto idx = std::make_shared<const Indexing>(Indexing::build(*d, 2));
    ProperEncoderEnumerator en(std::make_shared<DiagramDecomposition>(d, idx));
    CHECK(en.at(0).words == std::vector<Bits>{"0", "1"});
    CHECK(en.at(1).words == std::vector<Bits>{"1", "0"});
    CHECK(en.at(0).order == 0);
    // The next encoders move up to level 1.
    CHECK(en.at(2).order == 1);
    CHECK(en.at(3).order == 1);
  }

  SUBCASE("three symbols: one profile, six assignments") {
    auto d = std::make_shared<const Diagram>(canonical_diagram({"a", "b", "c"}, 2, 1));
    auto idx = std::make_shared<const Indexing>(Indexing::build(*d, 2));
    ProperEncoderEnumerator en(std::make_shared<DiagramDecomposition>(d, idx));
    std::set<std::vector<Bits>> seen;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(en.at(i).order == 0);
      CHECK(is_proper(en.at(i)));
      seen.insert(en.at(i).words);
    }
    CHECK(seen.size() == 6);
    // Level 1 holds 9 > 8 vertices, so the enumeration stops there.
    CHECK_THROWS_AS(en.at(6), CapExceededError);
  }

  SUBCASE("levels beyond the cap stop the enumeration") {
    auto d = std::make_shared<const Diagram>(canonical_diagram({"a", "b"}, 2, 2));
    auto idx = std::make_shared<const Indexing>(Indexing::build(*d, 2));
    ProperEncoderEnumerator en(std::make_shared<DiagramDecomposition>(d, idx),
                               /*level_cap=*/8);
    CHECK_NOTHROW(en.at(49));  // 2 order-0 encoders + 48 order-1 encoders
    CHECK_THROWS_AS(en.at(50), CapExceededError);  // level 2 has 16 > 8 vertices

    ProperEncoderEnumerator tight(std::make_shared<DiagramDecomposition>(d, idx),
                                  /*level_cap=*/1);
    CHECK_THROWS_AS(tight.at(0), CapExceededError);
  }
}

TEST_CASE("encoder array and the combined scheme") {
  const auto levels = canonical_levels(4);
  EncoderArray arr(levels);

  SUBCASE("orders and lifts") {
    for (std::size_t i = 1; i <= 4; ++i)
      for (std::size_t j = i; j <= 4; ++j)
        CHECK(arr.entry(i, j).order == static_cast<int>(j) - 1);
    // Off-diagonal entries are lifts of the diagonal.
    const PrefixCode lifted = lift(arr.entry(2, 2), *levels);
    CHECK(arr.entry(2, 3).words == lifted.words);
  }

  SUBCASE("tau_0 degenerates to the first encoder without a header") {
    CHECK(arr.tau(0).words == arr.entry(1, 1).words);
  }

  SUBCASE("tau rates approach the entropy rate on the embedded IID source") {
    const double h = binary_entropy(0.1);
    const TableSource s =
        embed_sequential({"a", "b"}, 2, iid_marginals({0.9, 0.1}), 4, 1e-9, h);
    std::vector<double> trace;
    for (int n = 0; n <= 4; ++n) {
      const PrefixCode tau_n = arr.tau(n);
      const double r = rate(tau_n, s.level_pmf(n));
      std::size_t header = 0;
      while ((std::size_t{1} << header) < static_cast<std::size_t>(n) + 1) ++header;
      std::vector<const PrefixCode*> column;
      for (std::size_t i = 1; i <= static_cast<std::size_t>(n) + 1; ++i)
        column.push_back(&arr.entry(i, static_cast<std::size_t>(n) + 1));
      if (n >= 1) {
        // Per-symbol equality of the combination bound...
        for (std::size_t v = 0; v < tau_n.words.size(); ++v) {
          std::size_t shortest = column.front()->words[v].size();
          for (const PrefixCode* c : column) shortest = std::min(shortest, c->words[v].size());
          CHECK(tau_n.words[v].size() == header + shortest);
        }
        // ... hence the rate never exceeds header + best column rate.
        double best = std::numeric_limits<double>::infinity();
        for (const PrefixCode* c : column) best = std::min(best, rate(*c, s.level_pmf(n)));
        CHECK(r <= std::pow(2.0, -n) * static_cast<double>(header) + best + 1e-12);
      }
      trace.push_back(r);
    }
    // Decreasing after the one-column start; the last value is within the
    // header + enumeration gap of the true rate.
    for (std::size_t i = 2; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(trace.back() < 1.0);
    CHECK(trace.back() >= h - 1e-9);
  }
}

TEST_CASE("redundancy") {
  const Pmf p(0, {0.5, 0.25, 0.25});
  CHECK(redundancy(huffman(p, 2), p) == doctest::Approx(0.0));
  const PrefixCode flat = PrefixCode::make(0, 2, {"00", "01", "10"});
  CHECK(redundancy(flat, p) == doctest::Approx(0.5));

  const Pmf u4(0, {0.25, 0.25, 0.25, 0.25});
  const PrefixCode fixed = PrefixCode::make(0, 2, {"00", "01", "10", "11"});
  CHECK(redundancy(fixed, u4) == doctest::Approx(0.0));

  SUBCASE("redundancy is never negative") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      const Pmf q(0, random_pmf(2 + rng.next_below(6), rng));
      CHECK(redundancy(random_proper_code(0, static_cast<int>(q.size()), rng), q) >= -1e-12);
    }
  }
}

TEST_CASE("decoding round trips") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng.next_below(6));
    const PrefixCode c = random_proper_code(0, m, rng);
    const Decoder dec(c);
    for (std::int32_t v = 0; v < m; ++v) CHECK(dec.decode(c.words[static_cast<std::size_t>(v)]) == v);
    // Concatenated stream.
    Bits stream;
    std::vector<std::int32_t> sent;
    for (int i = 0; i < 20; ++i) {
      const auto v = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(m)));
      sent.push_back(v);
      stream += c.words[static_cast<std::size_t>(v)];
    }
    CHECK(dec.decode_sequence(stream, sent.size()) == sent);
  }

  SUBCASE("errors") {
    const PrefixCode c = PrefixCode::make(0, 2, {"0", "10", "11"});
    const Decoder dec(c);
    CHECK_THROWS_AS(dec.decode("1"), TruncatedInputError);
    CHECK_THROWS_AS(dec.decode("011"), InvalidCodewordError);
  }
}

TEST_CASE("sequential induction") {
  const auto levels = canonical_levels(3);
  EncoderArray arr(levels);
  // Use the weak-universal scheme's codes per order.
  auto provider = [&](int order) -> std::optional<PrefixCode> {
    if (order > 3) return std::nullopt;
    return arr.tau(order);
  };
  const SequentialScheme scheme(2, provider);

  SUBCASE("power decompositions") {
    CHECK(SequentialScheme::power_decomposition(4) == std::vector<std::int64_t>{4});
    CHECK(SequentialScheme::power_decomposition(5) == std::vector<std::int64_t>{4, 1});
    CHECK(SequentialScheme::power_decomposition(7) == std::vector<std::int64_t>{4, 2, 1});
  }

  SUBCASE("k = 4 codes the whole block at order 2") {
    const std::vector<std::int32_t> word = {0, 1, 1, 0};
    const PrefixCode tau2 = arr.tau(2);
    CHECK(scheme.encode(word) == tau2.words[0b0110]);
  }

  SUBCASE("k = 5 concatenates the order-2 and order-0 factors") {
    const std::vector<std::int32_t> word = {0, 1, 1, 0, 1};
    const PrefixCode tau2 = arr.tau(2);
    const PrefixCode tau0 = arr.tau(0);
    CHECK(scheme.encode(word) == tau2.words[0b0110] + tau0.words[1]);
  }

  SUBCASE("k = 7 splits into three factors") {
    const std::vector<std::int32_t> word = {1, 0, 0, 1, 1, 0, 1};
    const Bits bits = scheme.encode(word);
    CHECK(bits == arr.tau(2).words[0b1001] + arr.tau(1).words[0b10] + arr.tau(0).words[1]);
  }

  SUBCASE("round trips at k = 5 over random words") {
    Rng rng(53);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::int32_t> word(5);
      for (auto& sym : word) sym = static_cast<std::int32_t>(rng.next_below(2));
      CHECK(scheme.decode(scheme.encode(word), 5) == word);
    }
  }

  SUBCASE("missing orders are reported") {
    const std::vector<std::int32_t> word(16, 0);
    CHECK_THROWS_AS(scheme.encode(word), MissingOrderError);
  }
}
