#include "bpre/estimators.hpp"

#include <cmath>
#include <string>

#include "bpre/errors.hpp"

namespace bpre {

namespace {

void check_window(const Panel& panel, int tau, int n, bool ratio_based) {
  if (tau < 0 || n > panel.generations()) {
    throw parameter_error("window [" + std::to_string(tau) + ", " +
                          std::to_string(n) + "] outside panel generations");
  }
  if (ratio_based ? !(tau < n) : !(tau <= n)) {
    throw parameter_error("window requires tau < n");
  }
}

[[noreturn]] void subcritical(double m_hat) {
  throw estimation_error("subcritical sample mean m_hat = " +
                         std::to_string(m_hat) +
                         " <= 1, scaling factor undefined");
}

// Mean ratio and mean squared ratio over l in (tau, n], equally weighted
// across replicates and generations.
struct RatioMoments {
  double m = 0;
  double m2 = 0;
};

RatioMoments ratio_moments(const Panel& panel, int tau, int n) {
  const std::int64_t J = panel.replicates();
  const double steps = n - tau;
  RatioMoments out;
  for (std::int64_t j = 0; j < J; ++j) {
    double s = 0, s2 = 0;
    for (int l = tau + 1; l <= n; ++l) {
      const double ratio = static_cast<double>(panel.at(j, l)) /
                           static_cast<double>(panel.at(j, l - 1));
      s += ratio;
      s2 += ratio * ratio;
    }
    out.m += s / steps;
    out.m2 += s2 / steps;
  }
  out.m /= static_cast<double>(J);
  out.m2 /= static_cast<double>(J);
  return out;
}

}  // namespace

double scaling_factor(double m, int tau, int n) {
  if (!(m > 1.0)) subcritical(m);
  // Geometric-sum form: robust for m near 1 where the closed form
  // m^tau (m^{n-tau+1} - 1)/(m - 1) cancels badly.
  const double log_top = n * std::log(m);
  if (log_top < 700.0) {
    double sum = 0.0, pw = std::pow(m, tau);
    for (int k = tau; k <= n; ++k) {
      sum += pw;
      pw *= m;
    }
    return sum;
  }
  // log-sum-exp over k = tau..n with the max term at k = n; panels cap
  // counts at 2^61, so this is reachable only through direct calls.
  const double lm = std::log(m);
  double acc = 0.0;
  for (int k = tau; k <= n; ++k) acc += std::exp((k - n) * lm);
  const double result = std::exp(n * lm + std::log(acc));
  if (!std::isfinite(result)) {
    throw estimation_error("scaling factor overflows double range; the "
                           "window is too deep for m_hat = " +
                           std::to_string(m));
  }
  return result;
}

std::vector<double> scaled_window_sums(const Panel& panel, const Window& w,
                                       double scaling_N_hat) {
  check_window(panel, w.tau, w.n, false);
  std::vector<double> out(panel.replicates());
  for (std::int64_t j = 0; j < panel.replicates(); ++j) {
    double s = 0;
    for (int l = w.tau; l <= w.n; ++l) s += static_cast<double>(panel.at(j, l));
    out[j] = s / scaling_N_hat;
  }
  return out;
}

EstimateSet estimate_window(const Panel& panel, const Window& w) {
  check_window(panel, w.tau, w.n, true);
  const auto rm = ratio_moments(panel, w.tau, w.n);

  EstimateSet est;
  est.m_hat = rm.m;
  est.m2_hat = rm.m2;
  est.r_hat = std::sqrt(rm.m2) / rm.m;
  est.sigma2_star_hat = rm.m2 - rm.m * rm.m;
  est.jensen_violation = est.sigma2_star_hat < 0.0;
  if (!(est.m_hat > 1.0)) subcritical(est.m_hat);
  est.scaling_N_hat = scaling_factor(est.m_hat, w.tau, w.n);

  const auto sums = scaled_window_sums(panel, w, est.scaling_N_hat);
  double mA = 0;
  for (double x : sums) mA += x;
  est.mA_hat = mA / static_cast<double>(panel.replicates());
  return est;
}

EstimateSet estimate_last_two(const Panel& panel, int n) {
  if (n < 1) throw parameter_error("last-two estimator requires n >= 1");
  check_window(panel, n - 1, n, true);
  const auto rm = ratio_moments(panel, n - 1, n);

  EstimateSet est;
  est.m_hat = rm.m;
  est.m2_hat = rm.m2;
  est.r_hat = std::sqrt(rm.m2) / rm.m;
  est.sigma2_star_hat = rm.m2 - rm.m * rm.m;
  est.jensen_violation = est.sigma2_star_hat < 0.0;
  if (!(est.m_hat > 1.0)) subcritical(est.m_hat);
  // Only the last generation enters the ancestor estimate, scaled by m^n.
  est.scaling_N_hat = std::pow(est.m_hat, n);
  double mA = 0;
  for (std::int64_t j = 0; j < panel.replicates(); ++j) {
    mA += static_cast<double>(panel.at(j, n)) / est.scaling_N_hat;
  }
  est.mA_hat = mA / static_cast<double>(panel.replicates());
  return est;
}

WeightedMeanEstimate estimate_weighted_m(const Panel& panel, const Window& w) {
  check_window(panel, w.tau, w.n, true);
  const std::int64_t J = panel.replicates();

  WeightedMeanEstimate out;
  double children = 0, parents = 0;
  std::vector<double> parents_by_rep(J, 0.0);
  for (std::int64_t j = 0; j < J; ++j) {
    for (int l = w.tau + 1; l <= w.n; ++l) {
      children += static_cast<double>(panel.at(j, l));
      parents_by_rep[j] += static_cast<double>(panel.at(j, l - 1));
    }
    parents += parents_by_rep[j];
  }
  out.value = children / parents;

  out.between_weights.resize(J);
  out.within_weights.resize(J);
  for (std::int64_t j = 0; j < J; ++j) {
    out.between_weights[j] = parents_by_rep[j] / parents;
    out.within_weights[j].resize(w.n - w.tau);
    for (int l = w.tau + 1; l <= w.n; ++l) {
      out.within_weights[j][l - w.tau - 1] =
          static_cast<double>(panel.at(j, l - 1)) / parents_by_rep[j];
    }
  }
  return out;
}

SplitEstimate estimate_split(const Panel& panel, const SplitWindow& sw) {
  if (!(sw.tau1 < sw.tau2 && sw.tau2 < sw.n)) {
    throw parameter_error("split window requires tau1 < tau2 < n");
  }
  check_window(panel, sw.tau1, sw.n, true);

  SplitEstimate out;
  if (sw.mode == SplitMode::early_m) {
    // m from (tau1, tau2], ancestor from [tau2, n].
    const auto rm = ratio_moments(panel, sw.tau1, sw.tau2);
    if (!(rm.m > 1.0)) subcritical(rm.m);
    out.m_part = rm.m;
    const double N_hat = scaling_factor(rm.m, sw.tau2, sw.n);
    const auto sums = scaled_window_sums(
        panel, Window{sw.tau2, sw.n, SchemeCase::case_iii}, N_hat);
    double mA = 0;
    for (double x : sums) mA += x;
    out.mA_part = mA / static_cast<double>(panel.replicates());
  } else {
    // m from (tau2, n], ancestor from [tau1, tau2].
    const auto rm = ratio_moments(panel, sw.tau2, sw.n);
    if (!(rm.m > 1.0)) subcritical(rm.m);
    out.m_part = rm.m;
    const double N_hat = scaling_factor(rm.m, sw.tau1, sw.tau2);
    const auto sums = scaled_window_sums(
        panel, Window{sw.tau1, sw.tau2, SchemeCase::case_iii}, N_hat);
    double mA = 0;
    for (double x : sums) mA += x;
    out.mA_part = mA / static_cast<double>(panel.replicates());
  }
  return out;
}

double estimate_ratio(const EstimateSet& target, const EstimateSet& calibrator) {
  if (!(calibrator.mA_hat > 0.0)) {
    throw estimation_error("calibrator ancestor estimate must be positive");
  }
  return target.mA_hat / calibrator.mA_hat;
}

}  // namespace bpre
