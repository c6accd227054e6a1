// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Tolerances are pinned here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bpre/bootstrap.hpp"
#include "bpre/estimators.hpp"
#include "bpre/experiments.hpp"
#include "bpre/laws.hpp"
#include "bpre/oracle.hpp"
#include "bpre/panel.hpp"
#include "bpre/pipeline.hpp"
#include "bpre/variance.hpp"

using namespace bpre;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id,
              detail.c_str());
  if (!pass) ++g_failures;
}

bool within(double x, double target, double tol) {
  return std::abs(x - target) <= tol;
}

bool within_rel(double x, double target, double rel) {
  return std::abs(x - target) <= rel * std::abs(target);
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

// --- criterion 1: Table 4 at J = 50 ----------------------------------------
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentSpec spec;
  spec.name = "table4";
  spec.offspring = BetaBernoulli{90, 10};
  spec.ancestor = ZeroTruncPoisson{10};
  spec.window = Window{12, 20, SchemeCase::case_i};
  spec.J_grid = {50};
  spec.n_sims = 2000;
  spec.seed = 0x7ab1e40;
  const auto rep = run_replication_study(spec, 2);
  const auto& row = rep.rows[0];
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const bool pass = row.mean_point >= 9.9 && row.mean_point <= 10.1 &&
                    within_rel(row.mean_lambda_hat, 0.220, 0.10) &&
                    within(row.t_cr, 0.941, 0.02) &&
                    within(row.gauss_cr, 0.937, 0.02) && secs < 300.0;
  report(1, pass,
         fmt("table 4 @ J=50: mean mA=%.3f (in [9.9,10.1]), mean "
             "lambda_hat=%.4f (0.220 +-10%%), t CR=%.3f (0.941 +-0.02), G "
             "CR=%.3f (0.937 +-0.02), %.1fs (<300s)",
             row.mean_point, row.mean_lambda_hat, row.t_cr, row.gauss_cr,
             secs));
}

// --- criterion 2: Table 5 at J = 50 ----------------------------------------
void criterion_2() {
  ExperimentSpec spec;
  spec.name = "table5";
  spec.offspring = GammaPoisson{10, 0.03};
  spec.ancestor = ShiftedNegBinomial{4, 4, 0.4};
  spec.window = Window{12, 20, SchemeCase::case_i};
  spec.J_grid = {50};
  spec.n_sims = 2000;
  spec.seed = 0x7ab1e50;
  const auto rep = run_replication_study(spec, 2);
  const auto& row = rep.rows[0];
  const bool pass = within_rel(row.lambda_true, 0.724, 0.10) &&
                    within(row.t_cr, 0.908, 0.03);
  report(2, pass,
         fmt("table 5 @ J=50: Lambda=%.4f (0.724 +-10%%), t CR=%.3f "
             "(0.908 +-0.03)",
             row.lambda_true, row.t_cr));
}

// --- criterion 3: large offspring variance stress --------------------------
void criterion_3() {
  const auto tm = offspring_moments(GammaPoisson{0.4, 3.0});
  const double rounded = std::round(tm.r_star * 100.0) / 100.0;

  ExperimentSpec spec;
  spec.name = "stress";
  spec.offspring = GammaPoisson{0.4, 3.0};
  spec.ancestor = ZeroTruncPoisson{10};
  spec.window = Window{12, 20, SchemeCase::case_i};
  spec.J_grid = {50};
  spec.n_sims = 1000;
  spec.seed = 0x57e55;
  const auto rep = run_replication_study(spec, 2);
  const auto& row = rep.rows[0];
  const bool pass = rounded == 1.32 && row.gauss_cr < 0.6;
  report(3, pass,
         fmt("stress: r*=%.5f rounds to %.2f (=1.32), G CR=%.3f (<0.6, "
             "paper 0.386)",
             tm.r_star, rounded, row.gauss_cr));
}

// --- criterion 4: relative quantitation table -------------------------------
void criterion_4() {
  ExperimentSpec spec;
  spec.name = "relative";
  spec.kind = StudyKind::relative;
  spec.offspring = BetaBernoulli{90, 10};
  spec.ancestor = ShiftedPoisson{1, 999};
  spec.offspring_cal = BetaBernoulli{90, 10};
  spec.ancestor_cal = ShiftedPoisson{1, 99};
  spec.window = Window{10, 20, SchemeCase::case_iii};
  spec.J_grid = {50};
  spec.n_sims = 2000;
  spec.seed = 0x3e1a71;
  const auto rep = run_replication_study(spec, 2);
  const auto& row = rep.rows[0];
  const bool pass = row.mean_point >= 9.9 && row.mean_point <= 10.1 &&
                    within_rel(row.mean_lambda_hat, 0.041, 0.15) &&
                    within(row.gauss_cr, 0.941, 0.02);
  report(4, pass,
         fmt("relative @ J=50: mean R=%.3f (in [9.9,10.1]), mean "
             "lambda_R=%.4f (0.041 +-15%%), G CR=%.3f (0.941 +-0.02)",
             row.mean_point, row.mean_lambda_hat, row.gauss_cr));
}

// --- criterion 5: bootstrap variance and coverage ---------------------------
void criterion_5() {
  ExperimentSpec spec;
  spec.name = "bootstrap";
  spec.offspring = BetaBernoulli{90, 10};
  spec.ancestor = ZeroTruncPoisson{10};
  spec.window = Window{12, 20, SchemeCase::case_i};
  spec.J_grid = {50};
  spec.n_sims = 1000;
  spec.with_bootstrap = true;
  spec.bootstrap_B = 200;
  spec.seed = 0xb0075;
  const auto rep = run_replication_study(spec, 2);
  const auto& row = rep.rows[0];
  const bool pass = within_rel(row.boot_var, 0.221, 0.15) &&
                    within(row.boot_cr, 0.931, 0.025);
  report(5, pass,
         fmt("bootstrap @ J=50 B=200: mean Var_B=%.4f (0.221 +-15%%), B "
             "CR=%.3f (0.931 +-0.025)",
             row.boot_var, row.boot_cr));
}

// --- criterion 6: oracle equivalence ----------------------------------------
void criterion_6() {
  const auto tm = offspring_moments(BetaBernoulli{2, 2});
  bool pmf_ok = true;
  double worst = 0;
  for (std::int64_t z0 : {1, 2, 3}) {
    const auto chain =
        exact_pmf_chain(ExactPmf{{z0, 1.0L}}, BetaBernoulli{2, 2}, 5);
    const auto fn = exact_functionals(chain);
    const AncestorMoments am{static_cast<double>(z0), 0.0};
    for (int n = 1; n <= 5; ++n) {
      const double gap = std::abs(var_Z(tm, am, n) - fn.variance[n]);
      worst = std::max(worst, gap);
      pmf_ok = pmf_ok && gap <= 1e-10;
    }
  }

  const std::int64_t J = 100'000;
  const Window w{2, 5};
  const Panel panel = simulate_panel(SimConfig{J, w.n, 0xacce6},
                                     BetaBernoulli{2, 2}, ConstantAncestor{1});
  const auto am = ancestor_moments(ConstantAncestor{1});
  const double N_star = scaling_factor(tm.m_star, w.tau, w.n);
  const auto sums = scaled_window_sums(panel, w, N_star);
  double mean = 0;
  for (double x : sums) mean += x;
  mean /= static_cast<double>(J);
  double m2 = 0, m4 = 0;
  for (double x : sums) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(J);
  m4 /= static_cast<double>(J);
  const double sample_var = m2 * J / (J - 1.0);
  const double se = std::sqrt((m4 - m2 * m2) / J);
  const double lambdaJ =
      exact_finite_variances(tm, am, w, J).lambda * static_cast<double>(J);
  const bool mc_ok = std::abs(sample_var - lambdaJ) <= 3.0 * se;

  report(6, pmf_ok && mc_ok,
         fmt("oracle equivalence: max |Var_pmf - Var_formula| = %.2e "
             "(<=1e-10); |S^2 - J Lambda| = %.2e <= 3 SE = %.2e at J=1e5",
             worst, std::abs(sample_var - lambdaJ), 3.0 * se));
}

// --- criterion 7: formula identities ----------------------------------------
void criterion_7() {
  const auto tm22 = offspring_moments(BetaBernoulli{2, 2});
  const auto unit = ancestor_moments(ConstantAncestor{1});
  const auto tm_gp = offspring_moments(GammaPoisson{10, 0.03});
  const AncestorMoments am_gp{10.0, 15.0};

  const bool f0_ok =
      within_rel(sigma_F2(tm22, unit, 0) * tm22.m2_star, frak_D(tm22, unit),
                 1e-10) &&
      within_rel(sigma_F2(tm_gp, am_gp, 0) * tm_gp.m2_star,
                 frak_D(tm_gp, am_gp), 1e-10);

  // delta = 40 meets 1e-6 for Beta(2,2); the Gamma-Poisson rate (m*/m2*)^d
  // is 0.765 and crosses 1e-6 only near delta = 60 (see the variance tests)
  const bool conv_ok =
      std::abs(sigma_F2(tm22, unit, 40) - sigma_I2(tm22, unit)) <
          1e-6 * sigma_I2(tm22, unit) &&
      std::abs(sigma_F2(tm_gp, am_gp, 60) - sigma_I2(tm_gp, am_gp)) <
          1e-6 * sigma_I2(tm_gp, am_gp);

  const auto tm_gw = offspring_moments(DegenerateGW{{{1, 0.5}, {3, 0.5}}});
  const double D_gw = frak_D(tm_gw, unit);
  bool gw_ok = within_rel(sigma_I2(tm_gw, unit),
                          D_gw / (tm_gw.m_star * tm_gw.m_star), 1e-12);
  for (int delta : {0, 3, 10}) {
    gw_ok = gw_ok && within_rel(sigma_F2(tm_gw, unit, delta),
                                D_gw / (tm_gw.m_star * tm_gw.m_star), 1e-12);
  }

  const bool d1_ok = within(frak_D_n(tm22, unit, 1), 0.25, 1e-12) &&
                     within(var_Z(tm22, unit, 1), 0.25, 1e-12);

  report(7, f0_ok && conv_ok && gw_ok && d1_ok,
         fmt("identities: sigma_F2(0)=D/m2* %s, sigma_F2(40)->sigma_I2 %s, "
             "GW reduction %s, D_1=Var(Z_1)=0.25 %s",
             f0_ok ? "ok" : "FAIL", conv_ok ? "ok" : "FAIL",
             gw_ok ? "ok" : "FAIL", d1_ok ? "ok" : "FAIL"));
}

// --- criterion 8: learning and scheme orderings ------------------------------
void criterion_8() {
  // Learning ordering under the second tabled setting (Gamma-Poisson).  Its
  // r* makes the theorem-4/5 rate gap resolvable at R = 2000; under the
  // Beta(90,10) setting the true gap is a few tenths of a percent and sits
  // below Monte Carlo noise at any practical R (measured at R = 1e5).
  const auto split_var = [](SplitWindow sw, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.kind = StudyKind::split;
    spec.offspring = GammaPoisson{10, 0.03};
    spec.ancestor = ShiftedNegBinomial{4, 4, 0.4};
    spec.window = Window{sw.tau1, sw.n, SchemeCase::case_i};
    spec.split = sw;
    spec.J_grid = {50};
    spec.n_sims = 2000;
    spec.seed = seed;
    return run_replication_study(spec, 2).rows[0].emp_var_point;
  };
  // identical panels per case: same seed for both split modes
  const double early_i = split_var({12, 15, 20, SplitMode::early_m}, 0x8a);
  const double late_i = split_var({12, 15, 20, SplitMode::late_m}, 0x8a);
  const double early_iii = split_var({10, 13, 20, SplitMode::early_m}, 0x8b);
  const double late_iii = split_var({10, 13, 20, SplitMode::late_m}, 0x8b);
  const bool learning_ok = late_i < early_i && late_iii < early_iii;

  const auto scheme_run = [](int tau, const char* name) {
    ExperimentSpec spec;
    spec.name = name;
    spec.offspring = BetaBernoulli{90, 10};
    spec.ancestor = ZeroTruncPoisson{10};
    spec.window = Window{tau, 20, SchemeCase::case_i};
    spec.J_grid = {5, 10, 20, 30, 40, 50};
    spec.n_sims = 2000;
    spec.with_bootstrap = true;
    spec.bootstrap_B = 200;
    spec.seed = 0x5c4e8e;
    return run_replication_study(spec, 2);
  };
  const auto case_i = scheme_run(12, "case_i");
  const auto case_ii = scheme_run(16, "case_ii");
  const auto case_iii = scheme_run(10, "case_iii");
  bool schemes_ok = true;
  for (std::size_t k = 0; k < case_i.rows.size(); ++k) {
    schemes_ok = schemes_ok &&
                 case_ii.rows[k].boot_var > case_i.rows[k].boot_var &&
                 case_ii.rows[k].boot_var > case_iii.rows[k].boot_var;
  }

  report(8, learning_ok && schemes_ok,
         fmt("orderings: late<early var case(i) %.4g<%.4g %s, case(iii) "
             "%.4g<%.4g %s; case(ii) Var_B largest at every J %s",
             late_i, early_i, late_i < early_i ? "ok" : "FAIL", late_iii,
             early_iii, late_iii < early_iii ? "ok" : "FAIL",
             schemes_ok ? "ok" : "FAIL"));
}

// --- criterion 9: determinism ------------------------------------------------
void criterion_9() {
  const SimConfig cfg{40, 15, 0xd37e3};
  const Panel a = simulate_panel(cfg, BetaBernoulli{90, 10}, ZeroTruncPoisson{10}, 1);
  const Panel b = simulate_panel(cfg, BetaBernoulli{90, 10}, ZeroTruncPoisson{10}, 2);
  const bool sim_ok = a == b;

  ExperimentSpec spec;
  spec.window = Window{6, 12, SchemeCase::case_i};
  spec.J_grid = {10};
  spec.n_sims = 40;
  spec.with_bootstrap = true;
  spec.bootstrap_B = 50;
  spec.seed = 0xd37e4;
  write_study_report(run_replication_study(spec, 1), "acc_det_1");
  write_study_report(run_replication_study(spec, 2), "acc_det_2");
  const auto slurp = [](const char* path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool study_ok =
      slurp("acc_det_1/report.csv") == slurp("acc_det_2/report.csv");

#ifdef BPRE_CLI
  const std::string cli = BPRE_CLI;
  std::ofstream("acc_cfg.json")
      << R"({"offspring": {"kind": "gamma_poisson", "shape": 10, "scale": 0.03},
             "ancestor": {"kind": "shifted_neg_binomial", "shift": 4,
                          "successes": 4, "prob": 0.4},
             "replicates": 25, "generations": 12, "seed": 31})";
  std::system((cli + " --threads 1 simulate --config acc_cfg.json --out acc_a.csv > /dev/null").c_str());
  std::system((cli + " --threads 2 simulate --config acc_cfg.json --out acc_b.csv > /dev/null").c_str());
  const bool cli_ok = slurp("acc_a.csv") == slurp("acc_b.csv") &&
                      !slurp("acc_a.csv").empty();
#else
  const bool cli_ok = false;
#endif
  for (const char* f : {"acc_a.csv", "acc_b.csv", "acc_a.csv.meta.json",
                        "acc_b.csv.meta.json", "acc_cfg.json"}) {
    std::remove(f);
  }
  report(9, sim_ok && study_ok && cli_ok,
         fmt("determinism: panel threads 1==2 %s, study report bytes %s, CLI "
             "simulate bytes %s",
             sim_ok ? "ok" : "FAIL", study_ok ? "ok" : "FAIL",
             cli_ok ? "ok" : "FAIL"));
}

// --- criterion 10: real-data substitution ------------------------------------
void criterion_10() {
  // LH/SV/COVID numbers need the original datasets; the shipped substitute is
  // the synthetic-dilution exactness property plus the gated golden test.
  SeriesTable target, calibrator;
  target.kind = calibrator.kind = SeriesKind::pcr_fluorescence;
  for (int rep = 0; rep < 2; ++rep) {
    ReplicateSeries t, c;
    t.id = c.id = "w" + std::to_string(rep);
    for (int l = 1; l <= 12; ++l) {
      t.index.push_back(l);
      c.index.push_back(l);
      const double f = 0.01 * std::pow(2.0, l);
      t.value.push_back(f);
      c.value.push_back(f / 2.9505);
    }
    target.series.push_back(t);
    calibrator.series.push_back(c);
  }
  const auto rep = relative_quantify_pcr(target, calibrator, PcrParams{});
  const bool exact = std::abs(rep.R_hat - 2.9505) < 1e-12;
  const bool golden_absent = !std::ifstream("data/lh1.csv").good();
  report(10, exact,
         fmt("real-data substitution: noiseless dilution R=%.6f (=2.9505 "
             "exactly); appendix-A golden check %s",
             rep.R_hat,
             golden_absent ? "gated off (datasets not shipped)" : "active"));
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const std::vector<std::function<void()>> criteria = {
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false,
             std::string("exception: ") + e.what());
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%d/10 criteria passed in %.1fs\n", 10 - g_failures, secs);
  return g_failures == 0 ? 0 : 1;
}
