#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "bpre/bootstrap.hpp"
#include "bpre/errors.hpp"
#include "helpers.hpp"

using namespace bpre;
using bpre::testing::make_panel;

TEST_CASE("resampling a single replicate returns the same panel") {
  const Panel panel = make_panel({{1, 2, 4}});
  SplitMix64 rng(1);
  CHECK(resample_panel(panel, rng) == panel);
}

TEST_CASE("resampling identical rows is indistinguishable") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 4}, {1, 2, 4}});
  SplitMix64 rng(2);
  CHECK(resample_panel(panel, rng) == panel);
}

TEST_CASE("two-row resamples are uniform over the four outcomes") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 2}});
  const int N = 100'000;
  int counts[4] = {0, 0, 0, 0};
  SplitMix64 rng(3);
  for (int i = 0; i < N; ++i) {
    const Panel r = resample_panel(panel, rng);
    const int a = r.at(0, 2) == 4 ? 0 : 1;
    const int b = r.at(1, 2) == 4 ? 0 : 1;
    ++counts[2 * a + b];
  }
  const double se = std::sqrt(0.25 * 0.75 / N);
  for (int c : counts) {
    CHECK(std::abs(static_cast<double>(c) / N - 0.25) < 4.0 * se);
  }
}

TEST_CASE("bootstrap distribution matches the exhaustive oracle") {
  // Four equally likely resamples of {a, b} give mA values
  // {1, 1.032258, 1.032258, 1.052632}; exhaustive mean 1.029287.
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 2}});
  const Window w{0, 2};
  const int B = 40'000;
  const auto br = bootstrap_ci(panel, w, B, 0.95, 0x5ee);
  REQUIRE(br.skipped == 0);
  const std::set<double> expected{1.0, 12.0 / 11.625, 10.0 / 9.5};
  for (double v : br.mA_hats) {
    bool known = false;
    for (double e : expected) known = known || std::abs(v - e) < 1e-12;
    CHECK(known);
  }
  const double exhaustive_mean = (1.0 + 2.0 * (12.0 / 11.625) + 10.0 / 9.5) / 4.0;
  CHECK(exhaustive_mean == doctest::Approx(1.029287).epsilon(1e-6));
  // sd of the four-point distribution is about 0.0187
  CHECK(std::abs(br.mean_mA - exhaustive_mean) < 4.0 * 0.0187 / std::sqrt(B));
}

TEST_CASE("identical replicates give a degenerate interval") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 4}});
  const auto br = bootstrap_ci(panel, Window{0, 2}, 100, 0.95, 9);
  CHECK(br.var_B == 0.0);
  REQUIRE(br.ci.has_value());
  CHECK(br.ci->lower == br.mean_mA);
  CHECK(br.ci->upper == br.mean_mA);
}

TEST_CASE("bootstrap is deterministic in (panel, B, seed)") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 2}, {1, 3, 5}});
  const auto a = bootstrap_ci(panel, Window{0, 2}, 200, 0.95, 42);
  const auto b = bootstrap_ci(panel, Window{0, 2}, 200, 0.95, 42);
  CHECK(a.mA_hats == b.mA_hats);
  CHECK(a.mean_mA == b.mean_mA);
  CHECK(a.var_B == b.var_B);
  CHECK(a.ci->lower == b.ci->lower);
  CHECK(a.ci->upper == b.ci->upper);

  const auto c = bootstrap_ci(panel, Window{0, 2}, 200, 0.95, 43);
  CHECK(a.mA_hats != c.mA_hats);
}

TEST_CASE("quantile inversion satisfies F(F^-1(alpha)) >= alpha") {
  const Panel panel = simulate_panel(SimConfig{20, 8, 0x11},
                                     BetaBernoulli{90, 10}, ZeroTruncPoisson{10});
  const auto br = bootstrap_ci(panel, Window{2, 8}, 199, 0.95, 5);
  std::vector<double> centered(br.mA_hats);
  for (double& x : centered) x -= br.mean_mA;
  std::sort(centered.begin(), centered.end());
  const double B = static_cast<double>(centered.size());
  for (int i = 1; i <= 99; ++i) {
    const double alpha = i / 100.0;
    const double t = empirical_quantile(centered, alpha);
    double below = 0;
    for (double x : centered) below += x < t ? 1 : 0;
    CHECK(below / B >= alpha);
  }
}

TEST_CASE("resamples with subcritical means are skipped and counted") {
  // One constant row: the both-constant resample has m_hat = 1.
  const Panel panel = make_panel({{2, 4, 8}, {2, 2, 2}});
  const auto br = bootstrap_ci(panel, Window{0, 2}, 400, 0.95, 0xbad);
  CHECK(br.skipped > 0);
  // P(skip) = 1/4, so the 20% refusal policy triggers here.
  CHECK(br.skipped > 400 / 5);
  CHECK(br.ci_refused);
  CHECK_FALSE(br.ci.has_value());
  CHECK(br.var_B > 0.0);
}

TEST_CASE("paper literal interval orientation") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 2}, {1, 3, 5}});
  const Window w{0, 2};
  const auto corrected = bootstrap_ci(panel, w, 200, 0.95, 6, false);
  const auto literal = bootstrap_ci(panel, w, 200, 0.95, 6, true);
  REQUIRE(corrected.ci.has_value());
  REQUIRE(literal.ci.has_value());
  CHECK(corrected.ci->lower == literal.ci->lower);
  // t_A(alpha/2) is negative for a centered cdf, so the literal upper bound
  // sits below the corrected one.
  CHECK(literal.ci->upper <= corrected.ci->upper);
}

TEST_CASE("bootstrap input validation") {
  const Panel panel = make_panel({{1, 2, 4}, {1, 2, 2}});
  CHECK_THROWS_AS(bootstrap_ci(panel, Window{0, 2}, 1, 0.95, 1),
                  parameter_error);
  CHECK_THROWS_AS(bootstrap_ci(panel, Window{0, 2}, 100, 1.5, 1),
                  parameter_error);
}

TEST_CASE("bootstrap coverage is sane under both tabled settings at J = 20") {
  // nominal 95% intervals land in [0.85, 0.97] (paper: 0.918 and 0.911)
  const auto coverage = [](const OffspringLaw& law, const AncestorLaw& anc,
                           std::uint64_t seed) {
    const double truth = ancestor_moments(anc).mean;
    int covered = 0, valid = 0;
    for (int sim = 0; sim < 400; ++sim) {
      const Panel panel =
          simulate_panel(SimConfig{20, 20, mixed_key(seed, sim)}, law, anc);
      const auto br =
          bootstrap_ci(panel, Window{12, 20}, 100, 0.95, mixed_key(seed, sim, 1));
      if (!br.ci) continue;
      ++valid;
      covered += (br.ci->lower <= truth && truth <= br.ci->upper) ? 1 : 0;
    }
    REQUIRE(valid >= 390);
    return static_cast<double>(covered) / valid;
  };
  const double bb = coverage(BetaBernoulli{90, 10}, ZeroTruncPoisson{10}, 0xc0);
  CHECK(bb >= 0.85);
  CHECK(bb <= 0.97);
  const double gp =
      coverage(GammaPoisson{10, 0.03}, ShiftedNegBinomial{4, 4, 0.4}, 0xc1);
  CHECK(gp >= 0.85);
  CHECK(gp <= 0.97);
}
