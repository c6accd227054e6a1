#include "bpre/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "bpre/errors.hpp"
#include "bpre/laws_json.hpp"
#include "bpre/panel.hpp"

namespace bpre {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SimOutcome {
  bool failed = false;
  double point = 0;
  double lambda_hat = kNaN;
  bool g_cover = false, t_cover = false;
  double g_len = 0, t_len = 0;

  bool boot_valid = false;
  double boot_mean = 0, boot_var = 0;
  bool b_has_ci = false, b_cover = false;
  double b_len = 0;

  double z0_mean = 0, z0_var = 0;
  bool z0_g_cover = false, z0_t_cover = false;
  double z0_g_len = 0, z0_t_len = 0;
};

struct Welford {
  std::int64_t count = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
};

void benchmark_from_ancestors(const Panel& panel, double truth, double level,
                              SimOutcome& o) {
  const std::int64_t J = panel.replicates();
  double mean = 0;
  for (std::int64_t j = 0; j < J; ++j) mean += static_cast<double>(panel.at(j, 0));
  mean /= static_cast<double>(J);
  double ss = 0;
  for (std::int64_t j = 0; j < J; ++j) {
    const double d = static_cast<double>(panel.at(j, 0)) - mean;
    ss += d * d;
  }
  const double sample_var = J > 1 ? ss / static_cast<double>(J - 1) : 0.0;
  o.z0_mean = mean;
  o.z0_var = sample_var / static_cast<double>(J);
  const CI g = build_ci(mean, o.z0_var, J, CIMethod::gaussian, level);
  const CI t = build_ci(mean, o.z0_var, J, CIMethod::student_t, level);
  o.z0_g_cover = g.lower <= truth && truth <= g.upper;
  o.z0_t_cover = t.lower <= truth && truth <= t.upper;
  o.z0_g_len = g.upper - g.lower;
  o.z0_t_len = t.upper - t.lower;
}

SimOutcome run_one_replication(const ExperimentSpec& spec, std::int64_t J,
                               double truth, std::uint64_t sim_seed) {
  SimOutcome o;
  const Panel panel = simulate_panel(
      SimConfig{J, spec.window.n, sim_seed}, spec.offspring, spec.ancestor);
  benchmark_from_ancestors(panel, truth, spec.level, o);
  try {
    const EstimateSet est = estimate_window(panel, spec.window);
    o.point = est.mA_hat;
    const VarianceReport vr = empirical_variance(panel, spec.window, est);
    o.lambda_hat = vr.lambda_hat;
    const CI g = build_ci(est.mA_hat, vr.lambda_hat, J, CIMethod::gaussian,
                          spec.level);
    const CI t = build_ci(est.mA_hat, vr.lambda_hat, J, CIMethod::student_t,
                          spec.level);
    o.g_cover = g.lower <= truth && truth <= g.upper;
    o.t_cover = t.lower <= truth && truth <= t.upper;
    o.g_len = g.upper - g.lower;
    o.t_len = t.upper - t.lower;

    if (spec.with_bootstrap) {
      try {
        const BootstrapResult br =
            bootstrap_ci(panel, spec.window, spec.bootstrap_B, spec.level,
                         mixed_key(sim_seed, 0xb001));
        o.boot_valid = true;
        o.boot_mean = br.mean_mA;
        o.boot_var = br.var_B;
        if (br.ci) {
          o.b_has_ci = true;
          o.b_cover = br.ci->lower <= truth && truth <= br.ci->upper;
          o.b_len = br.ci->upper - br.ci->lower;
        }
      } catch (const estimation_error&) {
        // fewer than 2 usable resamples; tabulated via boot_valid
      }
    }
  } catch (const estimation_error&) {
    o.failed = true;
  }
  return o;
}

SimOutcome run_one_split(const ExperimentSpec& spec, std::int64_t J,
                         double truth, std::uint64_t sim_seed) {
  SimOutcome o;
  const Panel panel = simulate_panel(
      SimConfig{J, spec.window.n, sim_seed}, spec.offspring, spec.ancestor);
  benchmark_from_ancestors(panel, truth, spec.level, o);
  try {
    const SplitEstimate se = estimate_split(panel, *spec.split);
    o.point = se.mA_part;
  } catch (const estimation_error&) {
    o.failed = true;
  }
  return o;
}

SimOutcome run_one_relative(const ExperimentSpec& spec, std::int64_t J,
                            double truth, std::uint64_t sim_seed) {
  SimOutcome o;
  const Panel target = simulate_panel(
      SimConfig{J, spec.window.n, mixed_key(sim_seed, 0)}, spec.offspring,
      spec.ancestor);
  const Panel calib = simulate_panel(
      SimConfig{J, spec.window.n, mixed_key(sim_seed, 1)},
      spec.offspring_cal.value(), spec.ancestor_cal.value());
  try {
    const EstimateSet est_T = estimate_window(target, spec.window);
    const EstimateSet est_C = estimate_window(calib, spec.window);
    const double R = estimate_ratio(est_T, est_C);
    o.point = R;
    const VarianceReport v_T = empirical_variance(target, spec.window, est_T);
    const VarianceReport v_C = empirical_variance(calib, spec.window, est_C);
    const double lam_R = ratio_variance(R, est_T, est_C, v_T.per_replicate_var,
                                        v_C.per_replicate_var, J);
    o.lambda_hat = lam_R;
    const CI g = build_ci(R, lam_R, J, CIMethod::gaussian, spec.level);
    const CI t = build_ci(R, lam_R, J, CIMethod::student_t, spec.level);
    o.g_cover = g.lower <= truth && truth <= g.upper;
    o.t_cover = t.lower <= truth && truth <= t.upper;
    o.g_len = g.upper - g.lower;
    o.t_len = t.upper - t.lower;

    if (spec.with_bootstrap) {
      // Resample both groups independently and recompute the ratio.
      std::vector<double> ratios;
      ratios.reserve(spec.bootstrap_B);
      int skipped = 0;
      for (int b = 0; b < spec.bootstrap_B; ++b) {
        SplitMix64 rng_t = substream(mixed_key(sim_seed, 0xb002), b, 0);
        SplitMix64 rng_c = substream(mixed_key(sim_seed, 0xb002), b, 1);
        const Panel rt = resample_panel(target, rng_t);
        const Panel rc = resample_panel(calib, rng_c);
        try {
          const EstimateSet et = estimate_window(rt, spec.window);
          const EstimateSet ec = estimate_window(rc, spec.window);
          ratios.push_back(estimate_ratio(et, ec));
        } catch (const estimation_error&) {
          ++skipped;
        }
      }
      if (ratios.size() >= 2) {
        double mean = 0;
        for (double x : ratios) mean += x;
        mean /= static_cast<double>(ratios.size());
        double ss = 0;
        for (double x : ratios) ss += (x - mean) * (x - mean);
        o.boot_valid = true;
        o.boot_mean = mean;
        o.boot_var = ss / static_cast<double>(ratios.size());
        if (skipped <= spec.bootstrap_B / 5) {
          std::vector<double> centered(ratios);
          for (double& x : centered) x -= mean;
          std::sort(centered.begin(), centered.end());
          const double a = 1.0 - spec.level;
          const double lo = mean - empirical_quantile(centered, 1.0 - a / 2);
          const double hi = mean - empirical_quantile(centered, a / 2);
          o.b_has_ci = true;
          o.b_cover = lo <= truth && truth <= hi;
          o.b_len = hi - lo;
        }
      }
    }
  } catch (const estimation_error&) {
    o.failed = true;
  }
  return o;
}

double true_lambda(const ExperimentSpec& spec, std::int64_t J) {
  if (spec.kind == StudyKind::replication) {
    const auto tm = offspring_moments(spec.offspring);
    const auto am = ancestor_moments(spec.ancestor);
    return exact_finite_variances(tm, am, spec.window, J).lambda;
  }
  if (spec.kind == StudyKind::relative) {
    const auto tm_T = offspring_moments(spec.offspring);
    const auto am_T = ancestor_moments(spec.ancestor);
    const auto tm_C = offspring_moments(*spec.offspring_cal);
    const auto am_C = ancestor_moments(*spec.ancestor_cal);
    const double lam_T = exact_finite_variances(tm_T, am_T, spec.window, J).lambda;
    const double lam_C = exact_finite_variances(tm_C, am_C, spec.window, J).lambda;
    const double R = am_T.mean / am_C.mean;
    return R * R * (lam_T / (am_T.mean * am_T.mean) +
                    lam_C / (am_C.mean * am_C.mean));
  }
  return kNaN;
}

}  // namespace

StudyReport run_replication_study(const ExperimentSpec& spec, int threads) {
  if (spec.n_sims < 1) throw parameter_error("n_sims must be >= 1");
  if (spec.kind == StudyKind::split && !spec.split) {
    throw parameter_error("split study needs a split window");
  }
  if (spec.kind == StudyKind::relative &&
      (!spec.offspring_cal || !spec.ancestor_cal)) {
    throw parameter_error("relative study needs calibrator laws");
  }

  StudyReport report;
  report.name = spec.name;
  report.kind = spec.kind;
  const AncestorMoments am = ancestor_moments(spec.ancestor);
  report.truth = spec.kind == StudyKind::relative
                     ? am.mean / ancestor_moments(*spec.ancestor_cal).mean
                     : am.mean;

  for (std::size_t ji = 0; ji < spec.J_grid.size(); ++ji) {
    const std::int64_t J = spec.J_grid[ji];
    std::vector<SimOutcome> sims(spec.n_sims);

    auto run_range = [&](int begin, int end) {
      for (int r = begin; r < end; ++r) {
        const std::uint64_t sim_seed = mixed_key(spec.seed, ji, r);
        switch (spec.kind) {
          case StudyKind::replication:
            sims[r] = run_one_replication(spec, J, report.truth, sim_seed);
            break;
          case StudyKind::split:
            sims[r] = run_one_split(spec, J, report.truth, sim_seed);
            break;
          case StudyKind::relative:
            sims[r] = run_one_relative(spec, J, report.truth, sim_seed);
            break;
        }
      }
    };

    const int workers = std::max(1, threads);
    if (workers == 1 || spec.n_sims < 2 * workers) {
      run_range(0, spec.n_sims);
    } else {
      std::vector<std::thread> pool;
      std::exception_ptr error;
      std::mutex error_mutex;
      const int chunk = (spec.n_sims + workers - 1) / workers;
      for (int t = 0; t < workers; ++t) {
        const int begin = t * chunk;
        const int end = std::min(begin + chunk, spec.n_sims);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
          try {
            run_range(begin, end);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (error) std::rethrow_exception(error);
    }

    SettingSummary row;
    row.J = J;
    row.lambda_true = true_lambda(spec, J);
    Welford point, lam, g_len, t_len, boot_mean, boot_var, b_len;
    Welford z0_mean, z0_var, z0_g_len, z0_t_len;
    std::int64_t g_cov = 0, t_cov = 0, b_cov = 0, b_ci_count = 0;
    std::int64_t z0_g_cov = 0, z0_t_cov = 0, ok = 0;
    for (const SimOutcome& o : sims) {
      z0_mean.add(o.z0_mean);
      z0_var.add(o.z0_var);
      z0_g_len.add(o.z0_g_len);
      z0_t_len.add(o.z0_t_len);
      z0_g_cov += o.z0_g_cover ? 1 : 0;
      z0_t_cov += o.z0_t_cover ? 1 : 0;
      if (o.failed) {
        ++row.failed;
        continue;
      }
      ++ok;
      point.add(o.point);
      if (!std::isnan(o.lambda_hat)) {
        lam.add(o.lambda_hat);
        g_len.add(o.g_len);
        t_len.add(o.t_len);
        g_cov += o.g_cover ? 1 : 0;
        t_cov += o.t_cover ? 1 : 0;
      }
      if (o.boot_valid) {
        boot_mean.add(o.boot_mean);
        boot_var.add(o.boot_var);
        if (o.b_has_ci) {
          ++b_ci_count;
          b_cov += o.b_cover ? 1 : 0;
          b_len.add(o.b_len);
        }
      }
    }
    row.mean_point = point.mean;
    row.emp_var_point = point.variance();
    row.mean_lambda_hat = lam.count ? lam.mean : kNaN;
    row.gauss_cr = lam.count ? static_cast<double>(g_cov) / lam.count : kNaN;
    row.t_cr = lam.count ? static_cast<double>(t_cov) / lam.count : kNaN;
    row.gauss_ml = lam.count ? g_len.mean : kNaN;
    row.t_ml = lam.count ? t_len.mean : kNaN;
    row.boot_mean = boot_mean.count ? boot_mean.mean : kNaN;
    row.boot_var = boot_var.count ? boot_var.mean : kNaN;
    row.boot_cr = b_ci_count ? static_cast<double>(b_cov) / b_ci_count : kNaN;
    row.boot_ml = b_ci_count ? b_len.mean : kNaN;
    if (spec.kind == StudyKind::relative) {
      row.z0_mean = kNaN;
      row.z0_var = kNaN;
      row.z0_gauss_cr = row.z0_gauss_ml = row.z0_t_cr = row.z0_t_ml = kNaN;
    } else {
      row.z0_mean = z0_mean.mean;
      row.z0_var = z0_var.mean;
      row.z0_gauss_cr = static_cast<double>(z0_g_cov) / sims.size();
      row.z0_t_cr = static_cast<double>(z0_t_cov) / sims.size();
      row.z0_gauss_ml = z0_g_len.mean;
      row.z0_t_ml = z0_t_len.mean;
    }
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void write_csv(const std::vector<StudyReport>& reports, std::ofstream& out) {
  out << "study,J,failed,mean_point,emp_var_point,mean_lambda_hat,lambda_true,"
         "g_cr,g_ml,t_cr,t_ml,boot_mean,boot_var,b_cr,b_ml,"
         "z0_mean,z0_var,z0_g_cr,z0_g_ml,z0_t_cr,z0_t_ml\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << rep.name << ',' << r.J << ',' << r.failed << ','
          << fmt(r.mean_point) << ',' << fmt(r.emp_var_point) << ','
          << fmt(r.mean_lambda_hat) << ',' << fmt(r.lambda_true) << ','
          << fmt(r.gauss_cr) << ',' << fmt(r.gauss_ml) << ',' << fmt(r.t_cr)
          << ',' << fmt(r.t_ml) << ',' << fmt(r.boot_mean) << ','
          << fmt(r.boot_var) << ',' << fmt(r.boot_cr) << ',' << fmt(r.boot_ml)
          << ',' << fmt(r.z0_mean) << ',' << fmt(r.z0_var) << ','
          << fmt(r.z0_gauss_cr) << ',' << fmt(r.z0_gauss_ml) << ','
          << fmt(r.z0_t_cr) << ',' << fmt(r.z0_t_ml) << '\n';
    }
  }
}

void write_md(const std::vector<StudyReport>& reports, std::ofstream& out) {
  for (const auto& rep : reports) {
    out << "## " << rep.name << " (truth " << fmt(rep.truth) << ")\n\n";
    out << "| metric |";
    for (const auto& r : rep.rows) out << " J=" << r.J << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) out << "---|";
    out << '\n';
    const auto line = [&](const char* name, auto getter) {
      out << "| " << name << " |";
      for (const auto& r : rep.rows) out << ' ' << fmt(getter(r)) << " |";
      out << '\n';
    };
    line("mean estimate", [](const SettingSummary& r) { return r.mean_point; });
    line("empirical var", [](const SettingSummary& r) { return r.emp_var_point; });
    line("mean lambda_hat", [](const SettingSummary& r) { return r.mean_lambda_hat; });
    line("lambda", [](const SettingSummary& r) { return r.lambda_true; });
    line("G CR", [](const SettingSummary& r) { return r.gauss_cr; });
    line("G ML", [](const SettingSummary& r) { return r.gauss_ml; });
    line("t CR", [](const SettingSummary& r) { return r.t_cr; });
    line("t ML", [](const SettingSummary& r) { return r.t_ml; });
    line("boot mean", [](const SettingSummary& r) { return r.boot_mean; });
    line("Var_B", [](const SettingSummary& r) { return r.boot_var; });
    line("B CR", [](const SettingSummary& r) { return r.boot_cr; });
    line("B ML", [](const SettingSummary& r) { return r.boot_ml; });
    line("Z0 mean", [](const SettingSummary& r) { return r.z0_mean; });
    line("var(Z0 mean)", [](const SettingSummary& r) { return r.z0_var; });
    line("Z0 G CR", [](const SettingSummary& r) { return r.z0_gauss_cr; });
    line("Z0 t CR", [](const SettingSummary& r) { return r.z0_t_cr; });
    line("failed", [](const SettingSummary& r) { return double(r.failed); });
    out << '\n';
  }
}

}  // namespace

void write_study_report(const StudyReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/report.csv");
  write_csv({report}, csv);
  std::ofstream md(out_dir + "/report.md");
  write_md({report}, md);
}

void summarize_study(const std::vector<StudyReport>& reports,
                     ComparisonKind comparison, const std::string& out_dir) {
  if (reports.empty()) throw parameter_error("no reports to summarize");
  for (const auto& rep : reports) {
    if (rep.rows.size() != reports.front().rows.size()) {
      throw parameter_error("reports do not share a J grid");
    }
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      if (rep.rows[i].J != reports.front().rows[i].J) {
        throw parameter_error("reports do not share a J grid");
      }
    }
  }
  std::filesystem::create_directories(out_dir + "/plots");
  std::ofstream csv(out_dir + "/report.csv");
  write_csv(reports, csv);
  std::ofstream md(out_dir + "/report.md");
  write_md(reports, md);

  auto tsv = [&](const std::string& name, auto getter) {
    std::ofstream out(out_dir + "/plots/" + name + ".tsv");
    out << 'J';
    for (const auto& rep : reports) out << '\t' << rep.name;
    out << '\n';
    for (std::size_t i = 0; i < reports.front().rows.size(); ++i) {
      out << reports.front().rows[i].J;
      for (const auto& rep : reports) out << '\t' << fmt(getter(rep.rows[i]));
      out << '\n';
    }
  };

  switch (comparison) {
    case ComparisonKind::schemes:
      tsv("bootstrap_variance",
          [](const SettingSummary& r) { return r.boot_var; });
      tsv("bootstrap_coverage",
          [](const SettingSummary& r) { return r.boot_cr; });
      break;
    case ComparisonKind::learning:
      tsv("mA_variance", [](const SettingSummary& r) { return r.emp_var_point; });
      tsv("mA_mean", [](const SettingSummary& r) { return r.mean_point; });
      break;
    case ComparisonKind::relative:
      tsv("ratio_mean", [](const SettingSummary& r) { return r.mean_point; });
      tsv("ratio_variance",
          [](const SettingSummary& r) { return r.mean_lambda_hat; });
      tsv("ratio_coverage", [](const SettingSummary& r) { return r.gauss_cr; });
      break;
  }
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  try {
    ExperimentSpec spec;
    spec.name = j.value("name", std::string("study"));
    const std::string kind = j.value("kind", std::string("replication"));
    if (kind == "replication") {
      spec.kind = StudyKind::replication;
    } else if (kind == "split") {
      spec.kind = StudyKind::split;
    } else if (kind == "relative") {
      spec.kind = StudyKind::relative;
    } else {
      throw parse_error("unknown study kind: " + kind);
    }
    spec.offspring = offspring_from_json(j.at("offspring"));
    spec.ancestor = ancestor_from_json(j.at("ancestor"));
    if (j.contains("offspring_calibrator")) {
      spec.offspring_cal = offspring_from_json(j.at("offspring_calibrator"));
    }
    if (j.contains("ancestor_calibrator")) {
      spec.ancestor_cal = ancestor_from_json(j.at("ancestor_calibrator"));
    }
    const auto& w = j.at("window");
    spec.window.tau = w.at("tau").get<int>();
    spec.window.n = w.at("n").get<int>();
    const std::string sc = w.value("case", std::string("iii"));
    spec.window.scheme = sc == "i"    ? SchemeCase::case_i
                         : sc == "ii" ? SchemeCase::case_ii
                                      : SchemeCase::case_iii;
    if (j.contains("split")) {
      SplitWindow sw;
      sw.tau1 = j.at("split").at("tau1").get<int>();
      sw.tau2 = j.at("split").at("tau2").get<int>();
      sw.n = spec.window.n;
      const std::string mode = j.at("split").value("mode", std::string("late"));
      sw.mode = mode == "early" ? SplitMode::early_m : SplitMode::late_m;
      spec.split = sw;
    }
    spec.J_grid = j.at("J_grid").get<std::vector<std::int64_t>>();
    spec.n_sims = j.value("n_sims", 2000);
    spec.bootstrap_B = j.value("bootstrap_B", 200);
    spec.with_bootstrap = j.value("bootstrap", false);
    spec.level = j.value("level", 0.95);
    spec.seed = j.value("seed", std::uint64_t{1});
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad experiment spec: ") + e.what());
  }
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["kind"] = spec.kind == StudyKind::replication ? "replication"
              : spec.kind == StudyKind::split     ? "split"
                                                  : "relative";
  j["offspring"] = offspring_to_json(spec.offspring);
  j["ancestor"] = ancestor_to_json(spec.ancestor);
  if (spec.offspring_cal) {
    j["offspring_calibrator"] = offspring_to_json(*spec.offspring_cal);
  }
  if (spec.ancestor_cal) {
    j["ancestor_calibrator"] = ancestor_to_json(*spec.ancestor_cal);
  }
  j["window"] = {{"tau", spec.window.tau},
                 {"n", spec.window.n},
                 {"case", spec.window.scheme == SchemeCase::case_i    ? "i"
                          : spec.window.scheme == SchemeCase::case_ii ? "ii"
                                                                      : "iii"}};
  if (spec.split) {
    j["split"] = {{"tau1", spec.split->tau1},
                  {"tau2", spec.split->tau2},
                  {"mode", spec.split->mode == SplitMode::early_m ? "early"
                                                                  : "late"}};
  }
  j["J_grid"] = spec.J_grid;
  j["n_sims"] = spec.n_sims;
  j["bootstrap_B"] = spec.bootstrap_B;
  j["bootstrap"] = spec.with_bootstrap;
  j["level"] = spec.level;
  j["seed"] = spec.seed;
  return j;
}

}  // namespace bpre
