#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "bratteli/coding.hpp"
#include "bratteli/grid.hpp"
#include "bratteli/stats.hpp"

using namespace bratteli;

namespace {

std::shared_ptr<const KuhnGrid> grid21() { return std::make_shared<KuhnGrid>(2, 1); }

}  // namespace

TEST_CASE("barycentric distributions") {
  const KuhnGrid g(2, 1);

  SUBCASE("interior point splits between its cell endpoints") {
    const auto b = g.barycentric({0.3}, 1);
    REQUIRE(b.support.size() == 2);
    // 0.3 = 0.4 * 0 + 0.6 * (1/2): lattice points 0 and 1 at level 1.
    CHECK(b.support[0].first == GridPoint{0});
    CHECK(b.support[0].second == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(b.support[1].first == GridPoint{1});
    CHECK(b.support[1].second == doctest::Approx(0.6).epsilon(1e-12));
  }

  SUBCASE("grid vertices are point masses") {
    for (int n = 1; n <= 4; ++n) {
      const auto b = g.barycentric({0.5}, n);
      REQUIRE(b.support.size() == 1);
      CHECK(b.support[0].first == GridPoint{std::int64_t{1} << (n - 1)});
      CHECK(b.support[0].second == 1.0);
    }
    const auto upper = g.barycentric({1.0}, 3);
    REQUIRE(upper.support.size() == 1);
    CHECK(upper.support[0].first == GridPoint{8});
  }

  SUBCASE("exact rational vertices in two dimensions") {
    const KuhnGrid g32(3, 2);
    ExactPoint theta;
    theta.num = {BigInt(1), BigInt(2)};
    theta.den = 3;
    const auto b = g32.barycentric_exact(theta, 1);
    REQUIRE(b.support.size() == 1);
    CHECK(b.support[0] == BigLattice{BigInt(1), BigInt(2)});
    CHECK(b.weight_num[0] == b.weight_den);
  }

  SUBCASE("weights reconstruct the point") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      const int k = 1 + static_cast<int>(rng.next_below(3));
      const int beta = 2 + static_cast<int>(rng.next_below(2));
      const KuhnGrid gk(beta, k);
      std::vector<double> theta(static_cast<std::size_t>(k));
      for (auto& c : theta) c = rng.next_double();
      const int n = 1 + static_cast<int>(rng.next_below(6));
      const auto b = gk.barycentric(theta, n);
      const double denom = std::pow(static_cast<double>(beta), n);
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        double coord = 0.0;
        for (const auto& [p, w] : b.support)
          coord += w * static_cast<double>(p[static_cast<std::size_t>(c)]) / denom;
        CHECK(coord == doctest::Approx(theta[static_cast<std::size_t>(c)]).epsilon(1e-12));
      }
      for (const auto& [p, w] : b.support) total += w;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("points outside the cube are rejected") {
    CHECK_THROWS_AS(g.barycentric({1.25}, 2), OutOfDomainError);
    CHECK_THROWS_AS(g.barycentric({-0.1}, 2), OutOfDomainError);
  }
}

TEST_CASE("vertex multisets of the grid") {
  const KuhnGrid g(2, 1);

  SUBCASE("the midpoint averages itself twice") {
    for (int n = 2; n <= 5; ++n)
      CHECK(g.multiset_of(GridPoint{std::int64_t{1} << (n - 1)}, n) ==
            std::map<GridPoint, int>{{GridPoint{std::int64_t{1} << (n - 2)}, 2}});
  }

  SUBCASE("quarter point averages the cell endpoints") {
    CHECK(g.multiset_of(GridPoint{1}, 2) ==
          std::map<GridPoint, int>{{GridPoint{0}, 1}, {GridPoint{1}, 1}});
  }

  SUBCASE("the (3,2) grid reproduces the 2+1 edge split") {
    const KuhnGrid g32(3, 2);
    // Level-1 vertex (1/3, 0): twice the origin corner plus once (1, 0).
    CHECK(g32.multiset_of(GridPoint{1, 0}, 1) ==
          std::map<GridPoint, int>{{GridPoint{0, 0}, 2}, {GridPoint{1, 0}, 1}});
  }

  SUBCASE("multiplicities always total beta (admissibility)") {
    for (const auto& [beta, k, n_max] : {std::tuple<int, int, int>{2, 1, 4},
                                         {3, 2, 2},
                                         {2, 2, 3},
                                         {3, 1, 3}}) {
      const KuhnGrid gk(beta, k);
      for (int n = 1; n <= n_max; ++n) {
        for (std::int64_t ord = 0; ord < gk.level_vertex_count(n); ++ord) {
          int total = 0;
          for (const auto& [p, mult] : gk.multiset_of(gk.point_of(ord, n), n)) total += mult;
          CHECK(total == beta);
        }
      }
    }
  }
}

TEST_CASE("induced diagrams are regular") {
  SUBCASE("(3,2) levels 0-1 sizes match the grid counts") {
    const KuhnGrid g32(3, 2);
    const Diagram d = g32.induced_diagram(1);
    CHECK(d.level_size(0) == 4);
    CHECK(d.level_size(1) == 16);
    CHECK(check_regular(d, 3).regular);
  }

  SUBCASE("(2,1) level sizes are 2^n + 1") {
    const KuhnGrid g(2, 1);
    const Diagram d = g.induced_diagram(4);
    for (int n = 0; n <= 4; ++n) CHECK(d.level_size(n) == (1 << n) + 1);
    CHECK(check_regular(d, 2).regular);
  }

  SUBCASE("more shapes") {
    CHECK(check_regular(KuhnGrid(2, 2).induced_diagram(2), 2).regular);
    CHECK(check_regular(KuhnGrid(3, 1).induced_diagram(3), 3).regular);
  }
}

TEST_CASE("mu_theta tables are transport-consistent") {
  const KuhnGrid g(2, 1);
  const Diagram d = g.induced_diagram(5);
  for (double theta : {0.3, 0.5, 0.77, 1.0}) {
    for (int n = 1; n <= 5; ++n) {
      const Pmf upper = g.mu_theta_pmf({theta}, n);
      const Pmf moved = transport(d, upper);
      const Pmf lower = g.mu_theta_pmf({theta}, n - 1);
      for (std::size_t i = 0; i < lower.size(); ++i)
        CHECK(moved[i] == doctest::Approx(lower[i]).epsilon(1e-9));
    }
  }

  SUBCASE("corners give point masses at every level") {
    const Pmf corner = g.mu_theta_pmf({0.0}, 4);
    CHECK(corner[0] == doctest::Approx(1.0));
  }

  SUBCASE("the 0.3 table at level 1 spreads 0.4 / 0.6") {
    const Pmf p = g.mu_theta_pmf({0.3}, 1);
    CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.0));
  }
}

TEST_CASE("recursion-set sizes") {
  const auto g = grid21();

  SUBCASE("midpoint doubles its log-size per level") {
    CHECK(*g->c_size_exact(GridPoint{1}, 1) == 2);
    for (int n = 1; n <= 12; ++n) {
      const GridPoint mid{std::int64_t{1} << (n - 1)};
      CHECK(g->c_size_log2(mid, n) ==
            doctest::Approx(std::pow(2.0, n - 1)).epsilon(1e-9));
    }
  }

  SUBCASE("corners stay singletons") {
    for (int n = 1; n <= 10; ++n) {
      CHECK(g->c_size_log2(GridPoint{0}, n) == doctest::Approx(0.0));
      CHECK(*g->c_size_exact(GridPoint{0}, n) == 1);
    }
  }

  SUBCASE("the product formula matches the literal tuple-union recursion") {
    const TauThetaSource tau(g, {0.5});
    for (int n = 1; n <= 3; ++n) {
      for (std::int64_t ord = 0; ord < g->level_vertex_count(n); ++ord) {
        const GridPoint x = g->point_of(ord, n);
        const auto tokens = tau.c_set(x, n);  // literal enumeration
        const auto exact = g->c_size_exact(x, n);
        REQUIRE(exact.has_value());
        CHECK(*exact == static_cast<std::int64_t>(tokens.size()));
        // Tokens are pairwise distinct and average back to x.
        std::set<Vertex> uniq(tokens.begin(), tokens.end());
        CHECK(uniq.size() == tokens.size());
        for (const Vertex& v : tokens) CHECK(tau.token_point(n, v) == x);
      }
    }
  }

  SUBCASE("sizes beyond the exact threshold fall back to log domain") {
    const GridPoint mid{std::int64_t{1} << 10};
    CHECK_FALSE(g->c_size_exact(mid, 11).has_value());  // 2^1024 needs 1025 bits
    CHECK(g->c_size_log2(mid, 11) == doctest::Approx(1024.0));
  }
}

TEST_CASE("tau^theta pointwise law and sampler") {
  const auto g = grid21();

  SUBCASE("corner point: a single token with probability one") {
    const TauThetaSource tau(g, {0.0});
    Rng rng(1);
    const Vertex v = tau.sample(3, rng);
    CHECK(v == Vertex(8, 0));
    CHECK(tau.log2_prob(3, v) == doctest::Approx(0.0));
  }

  SUBCASE("midpoint at level 1: two tokens, each probability 1/2") {
    const TauThetaSource tau(g, {0.5});
    CHECK(std::exp2(tau.log2_prob(1, {0, 1})) == doctest::Approx(0.5));
    CHECK(std::exp2(tau.log2_prob(1, {1, 0})) == doctest::Approx(0.5));
    CHECK(tau.log2_prob(1, {1, 1}) == -std::numeric_limits<double>::infinity());
  }

  SUBCASE("table form validates as a source on the recursion-set diagram") {
    for (double theta : {0.3, 0.5, 0.9}) {
      const TauThetaSource tau(g, {theta});
      const TableSource table = tau.table_source(3);
      CHECK(check_regular(table.diagram(), 2).regular);
      const auto rep = validate_source(table, 1e-9);
      CHECK(rep.consistent);
    }
  }

  SUBCASE("empirical sampler law matches the pointwise probabilities") {
    const TauThetaSource tau(g, {0.3});
    const auto verts = tau.enumerate_level(3);
    REQUIRE(verts.has_value());
    Rng rng(2024);
    std::map<Vertex, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) counts[tau.sample(3, rng)] += 1;
    double stat = 0.0;
    int cells = 0;
    double skipped_mass = 0.0;
    for (const Vertex& v : *verts) {
      const double expect = draws * std::exp2(tau.log2_prob(3, v));
      if (expect < 5.0) {
        skipped_mass += expect;
        continue;
      }
      const auto it = counts.find(v);
      const double got = it == counts.end() ? 0.0 : it->second;
      stat += (got - expect) * (got - expect) / expect;
      ++cells;
    }
    REQUIRE(cells >= 10);
    CHECK(chi_square_cdf(stat, cells - 1) < 0.99);  // accept at the 1% level
  }
}

TEST_CASE("entropy approximants along the curve") {
  const auto g = grid21();

  SUBCASE("corners are flat zero") {
    for (int n : {1, 4, 9}) {
      CHECK(g->entropy_approximant({0.0}, n) == doctest::Approx(0.0));
      CHECK(g->entropy_approximant({1.0}, n) == doctest::Approx(0.0));
    }
  }

  SUBCASE("the midpoint sits at exactly one half for every level") {
    for (int n = 1; n <= 16; ++n)
      CHECK(g->entropy_approximant({0.5}, n) == 0.5);
  }

  SUBCASE("approximants decrease in the level") {
    for (double theta : {0.1, 0.3, 0.71}) {
      double prev = std::numeric_limits<double>::infinity();
      for (int n = 1; n <= 12; ++n) {
        const double cur = g->entropy_approximant({theta}, n);
        CHECK(cur <= prev + 1e-9);
        prev = cur;
      }
    }
  }

  SUBCASE("the limit estimate is consistent with deep approximants") {
    CHECK(g->entropy_rate_limit({0.5}) == doctest::Approx(0.5));
    CHECK(g->entropy_rate_limit({0.0}) == doctest::Approx(0.0));
    const double lim = g->entropy_rate_limit({0.3});
    CHECK(lim <= g->entropy_approximant({0.3}, 14) + 1e-12);
    CHECK(lim >= 0.0);
  }
}

TEST_CASE("combined scheme is uniformly good over the grid family") {
  // Worst-case normalized redundancy of tau_n over sampled members of the
  // family must not grow with the order (the family's entropy rate varies
  // continuously, which is what makes the uniform statement possible).
  const auto g = grid21();
  const TauThetaSource proto(g, {0.5});
  auto diagram = proto.c_set_diagram(3);
  auto idx = std::make_shared<const Indexing>(Indexing::build(*diagram, 2));
  EncoderArray arr(std::make_shared<DiagramDecomposition>(diagram, idx));

  std::vector<TableSource> family;
  for (int i = 0; i <= 10; ++i)
    family.push_back(TauThetaSource(g, {i / 10.0}).table_source(3));

  double prev_sup = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 3; ++n) {
    const PrefixCode tau_n = arr.tau(n);
    double sup = 0.0;
    for (const TableSource& member : family)
      sup = std::max(sup, std::pow(2.0, -n) * redundancy(tau_n, member.level_pmf(n)));
    CHECK(sup <= prev_sup + 1e-12);
    prev_sup = sup;
  }
}
