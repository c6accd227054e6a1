#pragma once

#include <cstdint>
#include <vector>

#include "bpre/panel.hpp"

namespace bpre {

// Sampling regimes for the observation window: fixed start (i), fixed-length
// moving window (ii), or both endpoints diverging (iii).  The tag only
// selects which limiting-variance constant applies; the estimators are
// identical.
enum class SchemeCase { case_i, case_ii, case_iii };

struct Window {
  int tau = 0;
  int n = 0;
  SchemeCase scheme = SchemeCase::case_iii;
};

enum class SplitMode { early_m, late_m };

// tau1 < tau2 < n; early_m learns the offspring mean from (tau1, tau2] and
// the ancestor mean from [tau2, n]; late_m swaps the blocks.
struct SplitWindow {
  int tau1 = 0;
  int tau2 = 0;
  int n = 0;
  SplitMode mode = SplitMode::late_m;
};

// Bundled point estimates for one window.
struct EstimateSet {
  double m_hat = 0;             // mean of ratio averages
  double m2_hat = 0;            // mean of squared-ratio averages
  double r_hat = 0;             // sqrt(m2_hat) / m_hat
  double scaling_N_hat = 0;     // sum_{k=tau}^{n} m_hat^k
  double mA_hat = 0;            // scaled window sums averaged over replicates
  double sigma2_star_hat = 0;   // m2_hat - m_hat^2
  bool jensen_violation = false;  // sample m2 < m^2 (possible at tiny J)
};

// Weighted alternative that divides total children by total parents,
// decomposed into its implied between/within replicate weights.
struct WeightedMeanEstimate {
  double value = 0;
  std::vector<double> between_weights;               // one per replicate
  std::vector<std::vector<double>> within_weights;   // per replicate, per step
};

struct SplitEstimate {
  double m_part = 0;
  double mA_part = 0;
};

// sum_{k=tau}^{n} m^k, evaluated in log space when the direct powers would
// overflow; requires m > 1.
double scaling_factor(double m, int tau, int n);

// Whole-window GMM estimators; throws estimation_error when the sample
// offspring mean is <= 1 (scaling factor undefined).
EstimateSet estimate_window(const Panel& panel, const Window& w);

// Last-two-generations estimators; the ancestor scaling uses m_hat^n rather
// than the window sum.
EstimateSet estimate_last_two(const Panel& panel, int n);

WeightedMeanEstimate estimate_weighted_m(const Panel& panel, const Window& w);

SplitEstimate estimate_split(const Panel& panel, const SplitWindow& sw);

// Relative quantitation: ratio of target to calibrator ancestor means.
double estimate_ratio(const EstimateSet& target, const EstimateSet& calibrator);

// Per-replicate scaled window sums N_hat^{-1} sum_{l=tau}^{n} Z_{l,j}; the
// replicate scatter of these drives the empirical variance of mA_hat.
std::vector<double> scaled_window_sums(const Panel& panel, const Window& w,
                                       double scaling_N_hat);

}  // namespace bpre
