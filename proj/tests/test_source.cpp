#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "bratteli/formats.hpp"
#include "bratteli/source.hpp"
#include "bratteli/stats.hpp"

using namespace bratteli;

namespace {

std::shared_ptr<const Diagram> shared(Diagram d) {
  return std::make_shared<const Diagram>(std::move(d));
}

// Random valid PMF via exponential spacings.
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

// Random regular diagram: level sizes in [2,5], multisets drawn until the
// orderings bound admits every group.
Diagram random_regular_diagram(int levels, int beta, Rng& rng) {
  std::vector<std::vector<std::string>> labels(static_cast<std::size_t>(levels) + 1);
  std::vector<std::vector<Multiset>> multisets(static_cast<std::size_t>(levels));
  std::vector<int> sizes;
  for (int n = 0; n <= levels; ++n) {
    // Keep levels coverable (beta * |V_n| edge slots reach every vertex
    // below) and regularizable (at most |V_{n-1}|^beta distinct tuples).
    int low = 2, high = 5;
    if (n > 0) {
      low = std::max(low, (sizes.back() + beta - 1) / beta);
      std::int64_t tuples = 1;
      for (int e = 0; e < beta && tuples <= high; ++e) tuples *= sizes.back();
      high = static_cast<int>(std::min<std::int64_t>(high, tuples));
    }
    sizes.push_back(low + static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(std::max(1, high - low + 1)))));
    for (int k = 0; k < sizes.back(); ++k)
      labels[static_cast<std::size_t>(n)].push_back("v" + std::to_string(n) + "_" +
                                                    std::to_string(k));
  }
  for (int n = 1; n <= levels; ++n) {
    while (true) {
      std::map<Multiset, int> counts;
      auto& ms = multisets[static_cast<std::size_t>(n - 1)];
      ms.assign(static_cast<std::size_t>(sizes[static_cast<std::size_t>(n)]), Multiset{});
      std::vector<bool> used(static_cast<std::size_t>(sizes[static_cast<std::size_t>(n - 1)]),
                             false);
      for (auto& m : ms) {
        for (int e = 0; e < beta; ++e) {
          const auto src = static_cast<std::int32_t>(
              rng.next_below(static_cast<std::uint64_t>(sizes[static_cast<std::size_t>(n - 1)])));
          m[src] += 1;
          used[static_cast<std::size_t>(src)] = true;
        }
        counts[m] += 1;
      }
      bool ok = std::all_of(used.begin(), used.end(), [](bool b) { return b; });
      for (const auto& [m, c] : counts)
        ok = ok && static_cast<std::uint64_t>(c) <= multiset_orderings_count(m);
      if (ok) break;
    }
  }
  return Diagram::build(std::move(labels), std::move(multisets));
}

}  // namespace

TEST_CASE("transport on the running examples") {
  const auto ex11 = shared(example_two_vertex_diagram(3));
  const Pmf moved = transport(*ex11, Pmf(1, {0.3, 0.7}));
  CHECK(moved.level() == 0);
  CHECK(moved[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(moved[1] == doctest::Approx(0.5).epsilon(1e-12));

  const auto pascal = shared(example_pascal_diagram(3));
  const Pmf down = transport(*pascal, Pmf(1, {0.25, 0.5, 0.25}));
  CHECK(down[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(down[1] == doctest::Approx(0.5).epsilon(1e-12));

  // Point mass at the left corner stays on the left spine.
  const Pmf corner = transport(*pascal, Pmf(2, {1.0, 0.0, 0.0, 0.0}));
  CHECK(corner[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(transport(*pascal, Pmf(1, {0.5, 0.5})), LevelMismatchError);
}

TEST_CASE("transport is linear") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Diagram d = random_regular_diagram(3, 2 + static_cast<int>(rng.next_below(2)), rng);
    const auto m = static_cast<std::size_t>(d.level_size(2));
    const auto a = random_pmf(m, rng), b = random_pmf(m, rng);
    const double w = rng.next_double();
    std::vector<double> mixed(m);
    for (std::size_t i = 0; i < m; ++i) mixed[i] = w * a[i] + (1.0 - w) * b[i];
    const Pmf lhs = transport(d, Pmf(2, mixed));
    const Pmf ta = transport(d, Pmf(2, a)), tb = transport(d, Pmf(2, b));
    for (std::size_t i = 0; i < lhs.size(); ++i)
      CHECK(lhs[i] == doctest::Approx(w * ta[i] + (1.0 - w) * tb[i]).epsilon(1e-12));
  }
}

TEST_CASE("entropy never grows by more than the branching factor under transport") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int beta = 2 + static_cast<int>(rng.next_below(2));
    const Diagram d = random_regular_diagram(2, beta, rng);
    const auto lambda = random_pmf(static_cast<std::size_t>(d.level_size(2)), rng);
    const Pmf moved = transport(d, Pmf(2, lambda));
    CHECK(entropy_bits(lambda) <= beta * entropy_bits(moved) + 1e-9);
  }
}

TEST_CASE("extend_down") {
  SUBCASE("the two-vertex diagram forces the uniform source") {
    const TableSource s = extend_down(shared(example_two_vertex_diagram(4)), Pmf(4, {0.2, 0.8}));
    for (int n = 0; n < 4; ++n) {
      CHECK(s.level_pmf(n)[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK(validate_source(s).consistent);
  }

  SUBCASE("level-0 marginal equals brute-force descent counting") {
    const auto pascal = shared(example_pascal_diagram(2));
    const Indexing idx = Indexing::build(*pascal, 2);
    Rng rng(99);
    const auto top = random_pmf(4, rng);
    const TableSource s = extend_down(pascal, Pmf(2, top));
    // Oracle: every address descends independently with equal edge choice.
    std::vector<double> counted(2, 0.0);
    for (std::int32_t x = 0; x < 4; ++x) {
      for (int a0 = 0; a0 < 2; ++a0) {
        for (int a1 = 0; a1 < 2; ++a1) {
          const std::int32_t mid = idx.child(2, x, a1);
          const std::int32_t bottom = idx.child(1, mid, a0);
          counted[static_cast<std::size_t>(bottom)] += 0.25 * top[static_cast<std::size_t>(x)];
        }
      }
    }
    CHECK(s.level_pmf(0)[0] == doctest::Approx(counted[0]).epsilon(1e-12));
    CHECK(s.level_pmf(0)[1] == doctest::Approx(counted[1]).epsilon(1e-12));
  }
}

TEST_CASE("source validation") {
  const int levels = 6;
  const auto sigma = builtin_source("pascal-sigma", levels);
  const auto tau = builtin_source("pascal-tau", levels);
  CHECK(validate_source(*sigma, 1e-9).consistent);
  CHECK(validate_source(*tau, 1e-9).consistent);

  SUBCASE("a perturbed table is flagged with the transported deviation") {
    auto d = shared(example_pascal_diagram(1));
    const TableSource bad(d, {Pmf(0, {1.0, 0.0}), Pmf(1, {0.9, 0.1, 0.0})});
    const auto rep = validate_source(bad, 1e-9);
    CHECK_FALSE(rep.consistent);
    CHECK(rep.max_deviation == doctest::Approx(0.05).epsilon(1e-9));
  }
}

TEST_CASE("entropy of PMFs") {
  CHECK(entropy_bits(Pmf(0, {0.5, 0.5})) == doctest::Approx(1.0));
  CHECK(entropy_bits(Pmf(0, {1.0, 0.0})) == doctest::Approx(0.0));
  CHECK(entropy_bits(Pmf(0, {0.5, 0.25, 0.25})) == doctest::Approx(1.5));
}

TEST_CASE("entropy rate approximants") {
  SUBCASE("two-vertex diagram halves the entropy per level") {
    const TableSource s = extend_down(shared(example_two_vertex_diagram(4)), Pmf(4, {0.5, 0.5}));
    const auto rates = entropy_rate_approximants(s, 4);
    for (int n = 0; n <= 4; ++n)
      CHECK(rates[static_cast<std::size_t>(n)].bits ==
            doctest::Approx(std::pow(2.0, -n)).epsilon(1e-12));
  }

  SUBCASE("embedded IID tables sit exactly at the symbol entropy") {
    const double h = binary_entropy(0.1);
    const TableSource s =
        embed_sequential({"a", "b"}, 2, iid_marginals({0.9, 0.1}), 4, 1e-9, h);
    const auto rates = entropy_rate_approximants(s, 4);
    for (const auto& r : rates) CHECK(r.bits == doctest::Approx(h).epsilon(1e-9));
    CHECK(validate_source(s).consistent);
  }

  SUBCASE("point-mass family has zero entropy at every level") {
    const auto sigma = builtin_source("pascal-sigma", 8);
    for (const auto& r : entropy_rate_approximants(*sigma, 8))
      CHECK(r.bits == doctest::Approx(0.0));
  }

  SUBCASE("approximants are non-increasing for explicit tables") {
    Rng rng(5);
    const auto d = shared(random_regular_diagram(4, 2, rng));
    const TableSource s = extend_down(d, Pmf(4, random_pmf(
        static_cast<std::size_t>(d->level_size(4)), rng)));
    const auto rates = entropy_rate_approximants(s, 4);
    for (std::size_t i = 1; i < rates.size(); ++i)
      CHECK(rates[i].bits <= rates[i - 1].bits + 1e-9);
    // First approximant bounds: H_inf <= H(mu_0) <= log2 |V_0|.
    CHECK(rates[0].bits <= std::log2(static_cast<double>(d->level_size(0))) + 1e-12);
  }
}

TEST_CASE("oracle IID source") {
  const auto bern = iid_bernoulli(0.1);

  SUBCASE("pointwise probabilities, sampling, and slicing are consistent") {
    CHECK(validate_source(*bern, 1e-9).consistent);
  }

  SUBCASE("Monte Carlo approximant matches the analytic rate") {
    Rng rng(7);
    const auto est = entropy_rate_approximant(*bern, 6, 20000, rng);
    CHECK(std::fabs(est.bits - binary_entropy(0.1)) <= 3.0 * est.std_error);
  }

  SUBCASE("sampler law matches pointwise probabilities (chi-square at 1%)") {
    Rng rng(13);
    const int level = 2;
    const auto verts = bern->enumerate_level(level);
    REQUIRE(verts.has_value());
    std::map<Vertex, int> counts;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) counts[bern->sample(level, rng)] += 1;
    double stat = 0.0;
    int cells = 0;
    for (const Vertex& v : *verts) {
      const double expect = draws * std::exp2(bern->log2_prob(level, v));
      if (expect < 5.0) continue;  // merge-tail convention: skip sparse cells
      const double got = counts.count(v) ? counts[v] : 0.0;
      stat += (got - expect) * (got - expect) / expect;
      ++cells;
    }
    CHECK(chi_square_cdf(stat, cells - 1) < 0.99);
  }
}

TEST_CASE("mixtures") {
  SUBCASE("pascal halves mix into two point masses per level") {
    const auto mixed = builtin_source("pascal-mix:0.5", 5);
    REQUIRE(mixed->has_tables());
    for (int n = 1; n <= 5; ++n) {
      const Pmf& p = mixed->level_pmf(n);
      CHECK(p[0] == doctest::Approx(0.5));
      CHECK(p[p.size() - 1] == doctest::Approx(0.5));
    }
    CHECK(validate_source(*mixed).consistent);
  }

  SUBCASE("single component is returned unchanged") {
    const auto bern = iid_bernoulli(0.3);
    MixtureSpec spec;
    spec.components.push_back({1.0, bern});
    CHECK(mix(spec) == bern);
  }

  SUBCASE("weights must sum to one") {
    MixtureSpec spec;
    spec.components.push_back({0.5, iid_bernoulli(0.1)});
    spec.components.push_back({0.6, iid_bernoulli(0.4)});
    CHECK_THROWS_AS(mix(spec), WeightSumError);
  }

  SUBCASE("explicit level-2 table equals the weighted sum of product measures") {
    const double h1 = binary_entropy(0.1), h4 = binary_entropy(0.4);
    const TableSource a = embed_sequential({"a", "b"}, 2, iid_marginals({0.9, 0.1}), 2, 1e-9, h1);
    const TableSource b = embed_sequential({"a", "b"}, 2, iid_marginals({0.6, 0.4}), 2, 1e-9, h4);
    MixtureSpec spec;
    spec.components.push_back({0.4, std::make_shared<TableSource>(a)});
    spec.components.push_back({0.6, std::make_shared<TableSource>(b)});
    const auto mixed = mix(spec);
    // Enumerate the 16 strings by hand.
    const Pmf& p = mixed->level_pmf(2);
    for (int r = 0; r < 16; ++r) {
      double pa = 1.0, pb = 1.0;
      for (int pos = 0; pos < 4; ++pos) {
        const int sym = (r >> (3 - pos)) & 1;
        pa *= sym ? 0.1 : 0.9;
        pb *= sym ? 0.4 : 0.6;
      }
      CHECK(p[static_cast<std::size_t>(r)] ==
            doctest::Approx(0.4 * pa + 0.6 * pb).epsilon(1e-12));
    }

    // Mixture entropy exceeds the weighted entropies by at most H(w).
    for (int n = 0; n <= 2; ++n) {
      const double scale = std::pow(2.0, -n);
      const double mixture = scale * entropy_bits(mixed->level_pmf(n));
      const double parts = scale * (0.4 * entropy_bits(a.level_pmf(n)) +
                                    0.6 * entropy_bits(b.level_pmf(n)));
      CHECK(mixture >= parts - 1e-9);
      CHECK(mixture <= parts + scale * binary_entropy(0.4) + 1e-9);
    }
  }

  SUBCASE("oracle mixture evaluates pointwise log-sum") {
    MixtureSpec spec;
    spec.components.push_back({0.4, iid_bernoulli(0.1)});
    spec.components.push_back({0.6, iid_bernoulli(0.4)});
    const auto mixed = mix(spec);
    CHECK_FALSE(mixed->has_tables());
    const Vertex v = {0, 1, 1, 0};  // abba
    const double expect = 0.4 * (0.9 * 0.1 * 0.1 * 0.9) + 0.6 * (0.6 * 0.4 * 0.4 * 0.6);
    CHECK(std::exp2(mixed->log2_prob(2, v)) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(validate_source(*mixed, 1e-9).consistent);
  }
}

TEST_CASE("sequential embeddings") {
  SUBCASE("the all-a process embeds as a point-mass source") {
    const TableSource s = embed_sequential({"a", "b"}, 2, iid_marginals({1.0, 0.0}), 3);
    CHECK(validate_source(s).consistent);
    CHECK(entropy_rate_approximants(s, 3).back().bits == doctest::Approx(0.0));
  }

  SUBCASE("two-state Markov marginals embed consistently") {
    const auto marginals =
        markov_marginals({{0.9, 0.1}, {0.4, 0.6}}, {0.8, 0.2});
    const TableSource s = embed_sequential({"a", "b"}, 2, marginals, 3);
    CHECK(validate_source(s, 1e-9).consistent);
  }

  SUBCASE("non-stationary marginals are rejected") {
    // Marginals of length 2 that contradict the length-1 table.
    MarginalFamily broken = [](std::int64_t k) -> std::vector<double> {
      if (k == 1) return {0.5, 0.5};
      if (k == 2) return {0.7, 0.1, 0.1, 0.1};
      std::vector<double> out(static_cast<std::size_t>(1) << k, 0.0);
      out[0] = 1.0;
      return out;
    };
    CHECK_THROWS_AS(embed_sequential({"a", "b"}, 2, broken, 1), NotStationaryError);
  }

  SUBCASE("a stationary pi is required") {
    CHECK_THROWS_AS(markov_marginals({{0.9, 0.1}, {0.4, 0.6}}, {0.5, 0.5}),
                    NotStationaryError);
  }
}
