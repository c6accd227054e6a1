#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpre/bootstrap.hpp"
#include "bpre/estimators.hpp"
#include "bpre/laws.hpp"
#include "bpre/variance.hpp"

namespace bpre {

enum class StudyKind { replication, split, relative };

struct ExperimentSpec {
  std::string name = "study";
  StudyKind kind = StudyKind::replication;

  OffspringLaw offspring = BetaBernoulli{90, 10};
  AncestorLaw ancestor = ZeroTruncPoisson{10};
  // Second group for relative studies.
  std::optional<OffspringLaw> offspring_cal;
  std::optional<AncestorLaw> ancestor_cal;

  Window window{12, 20, SchemeCase::case_i};
  std::optional<SplitWindow> split;  // used when kind == split

  std::vector<std::int64_t> J_grid = {50};
  int n_sims = 2000;        // R
  int bootstrap_B = 200;
  bool with_bootstrap = false;
  double level = 0.95;
  std::uint64_t seed = 1;
};

// One row per J value.  Coverage denominators exclude failed sims (counted
// separately); NaN marks fields a study kind does not produce.
struct SettingSummary {
  std::int64_t J = 0;
  int failed = 0;

  double mean_point = 0;      // mA_hat, split mA part, or R_hat
  double emp_var_point = 0;   // variance of the point estimate across sims
  double mean_lambda_hat = 0;
  double lambda_true = 0;
  double gauss_cr = 0, gauss_ml = 0;
  double t_cr = 0, t_ml = 0;

  double boot_mean = 0, boot_var = 0, boot_cr = 0, boot_ml = 0;

  // Benchmark from directly observed ancestors.
  double z0_mean = 0, z0_var = 0;
  double z0_gauss_cr = 0, z0_gauss_ml = 0, z0_t_cr = 0, z0_t_ml = 0;
};

struct StudyReport {
  std::string name;
  StudyKind kind = StudyKind::replication;
  double truth = 0;  // m_A or R
  std::vector<SettingSummary> rows;
};

StudyReport run_replication_study(const ExperimentSpec& spec, int threads = 1);

enum class ComparisonKind { schemes, learning, relative };

// Writes side-by-side tables for reports sharing a J grid: report.csv,
// report.md and one plot-ready TSV per metric (x = J, one column per series).
void summarize_study(const std::vector<StudyReport>& reports,
                     ComparisonKind comparison, const std::string& out_dir);

// Single-study emission: report.csv, report.md.
void write_study_report(const StudyReport& report, const std::string& out_dir);

ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

}  // namespace bpre
