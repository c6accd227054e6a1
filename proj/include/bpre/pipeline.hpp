#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpre/estimators.hpp"
#include "bpre/variance.hpp"

namespace bpre {

enum class SeriesKind { pcr_fluorescence, covid_cumulative };

struct ReplicateSeries {
  std::string id;
  std::vector<int> index;      // cycle or week, strictly increasing
  std::vector<double> value;   // fluorescence or cumulative cases
};

struct SeriesTable {
  SeriesKind kind = SeriesKind::pcr_fluorescence;
  std::vector<ReplicateSeries> series;
  std::string label;
};

struct ReplicateWindow {
  std::string replicate;
  int tau1 = 0;  // detected start index
  int tau2 = 0;  // detected end index
};

// CSV with header "replicate,index,value"; indices must increase within a
// replicate, covid values must be nondecreasing, all values nonnegative.
SeriesTable load_series_csv(const std::string& path, SeriesKind kind);

// Exponential-phase rule: tau1 is the first cycle at or above F_star, tau2
// the end of the longest run of per-cycle growth >= m_c starting there.
ReplicateWindow detect_window_pcr(const ReplicateSeries& series, double f_star,
                                  double m_c);

// Stable-growth rule: tau is the first week with cases >= T1 whose next-week
// growth has settled to <= r1; the window ends when growth drops below r2.
ReplicateWindow detect_window_covid(const ReplicateSeries& series, double t1,
                                    double r1, double r2);

struct PcrParams {
  double f_star = 0.2;
  double m_c = 1.5;
  double c = 1.0;  // fluorescence per molecule; counts are value / c
};

struct CovidParams {
  double t1 = 100;
  double r1 = 2.0;
  double r2 = 1.05;
  bool common_tau = false;  // align all replicates on the latest tau1
};

// Per-group estimates over per-replicate windows: ratio moments averaged
// with equal weight per replicate, ancestor scaling over each replicate's
// own window (the c divisor only rescales mA_hat).
struct GroupEstimate {
  EstimateSet est;
  double m_se = 0;               // sqrt(sigma2*_hat / (J * mean window len))
  double per_replicate_var = 0;  // scatter of scaled window sums
  double lambda_hat = 0;         // per_replicate_var / J
  double mean_window_len = 0;
  std::vector<ReplicateWindow> windows;
  std::vector<std::string> excluded;  // replicate ids with no usable window
};

GroupEstimate estimate_group_pcr(const SeriesTable& table, const PcrParams& p);
GroupEstimate estimate_group_covid(const SeriesTable& table,
                                   const CovidParams& p);

struct QuantReport {
  GroupEstimate target;
  GroupEstimate calibrator;
  double R_hat = 0;
  double lambda_R = 0;
  CI ci;
};

QuantReport relative_quantify_pcr(const SeriesTable& target,
                                  const SeriesTable& calibrator,
                                  const PcrParams& p, double level = 0.95);
QuantReport relative_quantify_covid(const SeriesTable& group1,
                                    const SeriesTable& group2,
                                    const CovidParams& p, double level = 0.95);

nlohmann::json quant_report_to_json(const QuantReport& report);
std::string quant_report_to_text(const QuantReport& report);

}  // namespace bpre
