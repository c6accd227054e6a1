// bpre: simulation and ancestral inference for replicated supercritical
// branching processes in random environments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpre/bootstrap.hpp"
#include "bpre/errors.hpp"
#include "bpre/estimators.hpp"
#include "bpre/experiments.hpp"
#include "bpre/laws_json.hpp"
#include "bpre/oracle.hpp"
#include "bpre/panel.hpp"
#include "bpre/pipeline.hpp"
#include "bpre/variance.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bpre::parse_error("cannot open: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw bpre::parse_error(path + ": " + e.what());
  }
}

json estimate_to_json(const bpre::EstimateSet& est) {
  return {{"m_hat", est.m_hat},
          {"m2_hat", est.m2_hat},
          {"r_hat", est.r_hat},
          {"scaling_N_hat", est.scaling_N_hat},
          {"mA_hat", est.mA_hat},
          {"sigma2_star_hat", est.sigma2_star_hat},
          {"jensen_violation", est.jensen_violation}};
}

bpre::SchemeCase parse_case(const std::string& s) {
  if (s == "i") return bpre::SchemeCase::case_i;
  if (s == "ii") return bpre::SchemeCase::case_ii;
  if (s == "iii") return bpre::SchemeCase::case_iii;
  throw bpre::parse_error("unknown sampling case: " + s);
}

int run(int argc, char** argv) {
  CLI::App app{"BPRE simulation and ancestral inference"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for simulation loops");

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "simulate a replicated panel");
  std::string sim_config, sim_out;
  sim->add_option("--config", sim_config, "JSON config")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();

  // --- estimate ---
  auto* est_cmd = app.add_subcommand("estimate", "point estimates for a window");
  std::string est_panel, est_split, est_mode = "late";
  int est_tau = 0, est_n = 0;
  bool est_json = false;
  est_cmd->add_option("--panel", est_panel)->required();
  est_cmd->add_option("--tau", est_tau)->required();
  est_cmd->add_option("--n", est_n)->required();
  est_cmd->add_option("--split", est_split, "tau1,tau2 for split estimation");
  est_cmd->add_option("--mode", est_mode, "early|late split mode");
  est_cmd->add_flag("--json", est_json);

  // --- variance ---
  auto* var_cmd = app.add_subcommand("variance", "empirical variance report");
  std::string var_panel, var_model;
  int var_tau = 0, var_n = 0;
  bool var_json = false;
  var_cmd->add_option("--panel", var_panel)->required();
  var_cmd->add_option("--tau", var_tau)->required();
  var_cmd->add_option("--n", var_n)->required();
  var_cmd->add_option("--model", var_model,
                      "beta_bernoulli|gamma_poisson for sigma_A^2 inversion");
  var_cmd->add_flag("--json", var_json);

  // --- constants ---
  auto* con_cmd = app.add_subcommand("constants", "theoretical constants");
  std::string con_config, con_case = "iii";
  int con_tau = 0, con_delta = 0, con_n = -1, con_depth = 8;
  std::int64_t con_J = 0;
  con_cmd->add_option("--config", con_config, "JSON config with laws")->required();
  con_cmd->add_option("--case", con_case, "sampling case i|ii|iii");
  con_cmd->add_option("--tau", con_tau);
  con_cmd->add_option("--delta", con_delta, "window length for case ii");
  con_cmd->add_option("--n", con_n, "when >= tau, also report Lambda_{tau,n,J}");
  con_cmd->add_option("--J", con_J, "replicates for Lambda");
  con_cmd->add_option("--depth", con_depth,
                      "exact chain depth for the case-(i) harmonic constants");

  // --- bootstrap ---
  auto* boot_cmd = app.add_subcommand("bootstrap", "Algorithm-1 bootstrap CI");
  std::string boot_panel;
  int boot_tau = 0, boot_n = 0, boot_B = 200;
  double boot_level = 0.95;
  std::uint64_t boot_seed = 1;
  bool boot_json = false, boot_literal = false;
  boot_cmd->add_option("--panel", boot_panel)->required();
  boot_cmd->add_option("--tau", boot_tau)->required();
  boot_cmd->add_option("--n", boot_n)->required();
  boot_cmd->add_option("--B", boot_B);
  boot_cmd->add_option("--level", boot_level);
  boot_cmd->add_option("--seed", boot_seed);
  boot_cmd->add_flag("--json", boot_json);
  boot_cmd->add_flag("--paper-literal", boot_literal,
                     "emit Algorithm 1's literal interval orientation");

  // --- oracle ---
  auto* ora_cmd = app.add_subcommand("oracle", "exact per-generation functionals");
  std::string ora_law, ora_ancestor = R"({"kind":"constant","value":1})";
  int ora_n = 6;
  bool ora_json = false;
  ora_cmd->add_option("--law", ora_law, "offspring law JSON")->required();
  ora_cmd->add_option("--ancestor", ora_ancestor, "ancestor law JSON");
  ora_cmd->add_option("--n", ora_n);
  ora_cmd->add_flag("--json", ora_json);

  // --- experiment ---
  auto* exp_cmd = app.add_subcommand("experiment", "replication studies");
  std::string exp_spec, exp_out;
  bool exp_paper = false;
  exp_cmd->add_option("--spec", exp_spec)->required();
  exp_cmd->add_option("--out", exp_out)->required();
  exp_cmd->add_flag("--exact-paper", exp_paper,
                    "run the published 5000-simulation profile");

  // --- pcr ---
  auto* pcr = app.add_subcommand("pcr", "qPCR pipelines");
  auto* pcr_q = pcr->add_subcommand("quantify", "relative quantitation");
  std::string pcr_target, pcr_cal, pcr_json_out;
  bpre::PcrParams pcr_params;
  pcr_q->add_option("--target", pcr_target)->required();
  pcr_q->add_option("--calibrator", pcr_cal)->required();
  pcr_q->add_option("--fstar", pcr_params.f_star);
  pcr_q->add_option("--mc", pcr_params.m_c);
  pcr_q->add_option("--c", pcr_params.c, "fluorescence per molecule");
  pcr_q->add_option("--json", pcr_json_out, "write JSON report here");

  // --- covid ---
  auto* covid = app.add_subcommand("covid", "epidemic pipelines");
  auto* covid_a = covid->add_subcommand("analyze", "two-group comparison");
  std::string cov_g1, cov_g2, cov_json_out;
  bpre::CovidParams cov_params;
  bool cov_common_tau = false;
  covid_a->add_option("--group1", cov_g1)->required();
  covid_a->add_option("--group2", cov_g2)->required();
  covid_a->add_option("--t1", cov_params.t1);
  covid_a->add_option("--r1", cov_params.r1);
  covid_a->add_option("--r2", cov_params.r2);
  covid_a->add_flag("--common-tau", cov_common_tau,
                    "align replicates on the latest detected start week");
  covid_a->add_option("--json", cov_json_out);

  CLI11_PARSE(app, argc, argv);

  if (*sim) {
    const json cfg = load_json(sim_config);
    bpre::SimConfig sc;
    sc.replicates = cfg.at("replicates").get<std::int64_t>();
    sc.generations = cfg.at("generations").get<int>();
    sc.seed = cfg.value("seed", std::uint64_t{0});
    const auto offspring = bpre::offspring_from_json(cfg.at("offspring"));
    const auto ancestor = bpre::ancestor_from_json(cfg.at("ancestor"));
    const bpre::Panel panel =
        bpre::simulate_panel(sc, offspring, ancestor, threads);
    bpre::write_panel_csv(panel, sim_out);
    std::cout << "wrote " << sim_out << " (" << sc.replicates << " x "
              << sc.generations + 1 << " cells)\n";
    return 0;
  }

  if (*est_cmd) {
    const bpre::Panel panel = bpre::read_panel_csv(est_panel);
    if (!est_split.empty()) {
      bpre::SplitWindow sw;
      if (std::sscanf(est_split.c_str(), "%d,%d", &sw.tau1, &sw.tau2) != 2) {
        throw bpre::parse_error("--split expects tau1,tau2");
      }
      sw.n = est_n;
      sw.mode = est_mode == "early" ? bpre::SplitMode::early_m
                                    : bpre::SplitMode::late_m;
      const auto se = bpre::estimate_split(panel, sw);
      json out = {{"m_part", se.m_part}, {"mA_part", se.mA_part}};
      std::cout << out.dump(est_json ? -1 : 2) << '\n';
      return 0;
    }
    const auto est =
        bpre::estimate_window(panel, bpre::Window{est_tau, est_n});
    std::cout << estimate_to_json(est).dump(est_json ? -1 : 2) << '\n';
    return 0;
  }

  if (*var_cmd) {
    const bpre::Panel panel = bpre::read_panel_csv(var_panel);
    const bpre::Window w{var_tau, var_n};
    const auto est = bpre::estimate_window(panel, w);
    auto vr = bpre::empirical_variance(panel, w, est);
    json out = {{"per_replicate_var", vr.per_replicate_var},
                {"lambda_hat", vr.lambda_hat},
                {"kappa_tilde", vr.kappa_tilde},
                {"frak_D_tilde", vr.frak_D_tilde}};
    if (!var_model.empty()) {
      const auto kind = var_model == "beta_bernoulli"
                            ? bpre::ModelKind::beta_bernoulli
                            : bpre::ModelKind::gamma_poisson;
      const auto lt = bpre::estimate_last_two(panel, var_n);
      out["sigmaA2_hat"] = bpre::estimate_sigmaA2(lt, vr.kappa_tilde, kind);
    }
    if (panel.offspring && panel.ancestor) {
      const auto tm = bpre::offspring_moments(*panel.offspring);
      const auto am = bpre::ancestor_moments(*panel.ancestor);
      out["lambda_exact"] =
          bpre::exact_finite_variances(tm, am, w, panel.replicates()).lambda;
    }
    std::cout << out.dump(var_json ? -1 : 2) << '\n';
    return 0;
  }

  if (*con_cmd) {
    const json cfg = load_json(con_config);
    const auto offspring = bpre::offspring_from_json(cfg.at("offspring"));
    const auto ancestor = bpre::ancestor_from_json(cfg.at("ancestor"));
    const auto tm = bpre::offspring_moments(offspring);
    const auto am = bpre::ancestor_moments(ancestor);
    const auto scheme = parse_case(con_case);
    std::optional<bpre::HarmonicConstants> harmonic;
    if (scheme == bpre::SchemeCase::case_i) {
      harmonic =
          bpre::harmonic_constants(offspring, ancestor, con_tau, con_depth);
    }
    const auto ac = bpre::asymptotic_constants(tm, am, scheme, con_delta,
                                               harmonic);
    json out = {{"m_star", tm.m_star},
                {"m2_star", tm.m2_star},
                {"sigma2_star", tm.sigma2_star},
                {"gamma2_star", tm.gamma2_star},
                {"r_star", tm.r_star},
                {"m_A", am.mean},
                {"sigma_A2", am.variance},
                {"frak_D", ac.frak_D},
                {"sigma_I2", ac.sigma_I2},
                {"sigma_F2", ac.sigma_F2},
                {"sigma_tau2", ac.sigma_tau2}};
    if (harmonic) {
      out["lambda"] = ac.lambda;
      out["lambda_tau"] = ac.lambda_tau;
    }
    if (con_n >= con_tau && con_J > 0) {
      out["Lambda"] = bpre::exact_finite_variances(
                          tm, am, bpre::Window{con_tau, con_n}, con_J)
                          .lambda;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  if (*boot_cmd) {
    const bpre::Panel panel = bpre::read_panel_csv(boot_panel);
    const auto br =
        bpre::bootstrap_ci(panel, bpre::Window{boot_tau, boot_n}, boot_B,
                           boot_level, boot_seed, boot_literal);
    json out = {{"mean_mA", br.mean_mA},
                {"var_B", br.var_B},
                {"skipped", br.skipped},
                {"ci_refused", br.ci_refused}};
    if (br.ci) {
      out["ci"] = {{"lower", br.ci->lower},
                   {"upper", br.ci->upper},
                   {"level", br.ci->level}};
    }
    std::cout << out.dump(boot_json ? -1 : 2) << '\n';
    return 0;
  }

  if (*ora_cmd) {
    const auto law = bpre::offspring_from_json(json::parse(ora_law));
    const auto ancestor = bpre::ancestor_from_json(json::parse(ora_ancestor));
    json out;
    if (std::holds_alternative<bpre::GammaPoisson>(law)) {
      const auto mc = bpre::mc_functionals(law, ancestor, ora_n, 10'000'000,
                                           0xa11ce5, threads);
      out = {{"method", "monte_carlo"},
             {"paths", mc.paths},
             {"mean", mc.mean},
             {"variance", mc.variance},
             {"inv_mean", mc.inv_mean},
             {"mean_se", mc.mean_se},
             {"inv_mean_se", mc.inv_mean_se}};
    } else {
      const auto chain =
          bpre::exact_pmf_chain(bpre::ancestor_pmf(ancestor), law, ora_n);
      const auto fn = bpre::exact_functionals(chain);
      out = {{"method", "exact_pmf"},
             {"mean", fn.mean},
             {"variance", fn.variance},
             {"inv_mean", fn.inv_mean},
             {"lambda_partial", fn.lambda_partial},
             {"lambda", fn.lambda},
             {"lambda_tail_bound", fn.lambda_tail_bound}};
    }
    std::cout << out.dump(ora_json ? -1 : 2) << '\n';
    return 0;
  }

  if (*exp_cmd) {
    json spec_json = load_json(exp_spec);
    if (exp_paper) spec_json["n_sims"] = 5000;
    std::filesystem::create_directories(exp_out);
    const std::string comparison = spec_json.value("comparison", std::string());
    if (comparison.empty()) {
      const auto spec = bpre::spec_from_json(spec_json);
      const auto report = bpre::run_replication_study(spec, threads);
      bpre::write_study_report(report, exp_out);
      std::ofstream lock(exp_out + "/spec.lock.json");
      lock << bpre::spec_to_json(spec).dump(2) << '\n';
    } else {
      // Expand a comparison spec into named studies sharing the base fields.
      std::vector<bpre::ExperimentSpec> specs;
      bpre::ComparisonKind kind;
      json base = spec_json;
      base.erase("comparison");
      if (comparison == "schemes") {
        kind = bpre::ComparisonKind::schemes;
        for (const auto& [name, w] : spec_json.at("windows").items()) {
          json one = base;
          one.erase("windows");
          one["name"] = name;
          one["window"] = w;
          one["bootstrap"] = true;
          specs.push_back(bpre::spec_from_json(one));
        }
      } else if (comparison == "learning") {
        kind = bpre::ComparisonKind::learning;
        json whole = base;
        whole.erase("splits");
        whole["name"] = "whole_window";
        specs.push_back(bpre::spec_from_json(whole));
        for (const auto& [name, sp] : spec_json.at("splits").items()) {
          json one = base;
          one.erase("splits");
          one["name"] = name;
          one["kind"] = "split";
          one["split"] = sp;
          specs.push_back(bpre::spec_from_json(one));
        }
      } else if (comparison == "relative") {
        kind = bpre::ComparisonKind::relative;
        json one = base;
        one["kind"] = "relative";
        specs.push_back(bpre::spec_from_json(one));
      } else {
        throw bpre::parse_error("unknown comparison: " + comparison);
      }
      std::vector<bpre::StudyReport> reports;
      json lock = json::array();
      for (const auto& s : specs) {
        reports.push_back(bpre::run_replication_study(s, threads));
        lock.push_back(bpre::spec_to_json(s));
      }
      bpre::summarize_study(reports, kind, exp_out);
      std::ofstream lock_out(exp_out + "/spec.lock.json");
      lock_out << lock.dump(2) << '\n';
    }
    std::cout << "wrote " << exp_out << "/report.csv\n";
    return 0;
  }

  if (*pcr_q) {
    const auto target =
        bpre::load_series_csv(pcr_target, bpre::SeriesKind::pcr_fluorescence);
    const auto cal =
        bpre::load_series_csv(pcr_cal, bpre::SeriesKind::pcr_fluorescence);
    const auto report = bpre::relative_quantify_pcr(target, cal, pcr_params);
    std::cout << bpre::quant_report_to_text(report);
    if (!pcr_json_out.empty()) {
      std::ofstream out(pcr_json_out);
      out << bpre::quant_report_to_json(report).dump(2) << '\n';
    }
    return 0;
  }

  if (*covid_a) {
    cov_params.common_tau = cov_common_tau;
    const auto g1 =
        bpre::load_series_csv(cov_g1, bpre::SeriesKind::covid_cumulative);
    const auto g2 =
        bpre::load_series_csv(cov_g2, bpre::SeriesKind::covid_cumulative);
    const auto report = bpre::relative_quantify_covid(g1, g2, cov_params);
    std::cout << bpre::quant_report_to_text(report);
    if (!cov_json_out.empty()) {
      std::ofstream out(cov_json_out);
      out << bpre::quant_report_to_json(report).dump(2) << '\n';
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bpre::parameter_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const bpre::parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const bpre::estimation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
