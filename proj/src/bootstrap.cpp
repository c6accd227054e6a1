#include "bpre/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bpre/errors.hpp"

namespace bpre {

Panel resample_panel(const Panel& panel, SplitMix64& rng) {
  const std::int64_t J = panel.replicates();
  Panel out(J, panel.generations());
  out.seed = panel.seed;
  out.offspring = panel.offspring;
  out.ancestor = panel.ancestor;
  std::uniform_int_distribution<std::int64_t> pick(0, J - 1);
  for (std::int64_t j = 0; j < J; ++j) {
    const std::int64_t src = pick(rng);
    for (int l = 0; l <= panel.generations(); ++l) {
      out.at(j, l) = panel.at(src, l);
    }
  }
  return out;
}

double empirical_quantile(const std::vector<double>& sorted, double alpha) {
  if (sorted.empty()) throw estimation_error("empty sample");
  const double B = static_cast<double>(sorted.size());
  // F(x_(k)) = (#values strictly below x_(k)) / B; scan for the first index
  // meeting the level.  Ties share the same F value, so count them once.
  std::size_t below = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0 && sorted[k] > sorted[k - 1]) below = k;
    if (static_cast<double>(below) / B >= alpha) return sorted[k];
  }
  return sorted.back();
}

BootstrapResult bootstrap_ci(const Panel& panel, const Window& w, int B,
                             double level, std::uint64_t seed,
                             bool paper_literal) {
  if (B < 2) throw parameter_error("bootstrap needs B >= 2");
  if (!(level > 0.0 && level < 1.0)) {
    throw parameter_error("level must lie in (0,1)");
  }
  const std::int64_t J = panel.replicates();

  BootstrapResult out;
  out.m_hats.reserve(B);
  out.mA_hats.reserve(B);
  std::uniform_int_distribution<std::int64_t> pick(0, J - 1);

  std::vector<std::int64_t> rows(J);
  for (int b = 0; b < B; ++b) {
    // Substream per iteration: the loop can be parallelized without
    // changing any draw.
    SplitMix64 rng = substream(seed, static_cast<std::uint64_t>(b));
    for (std::int64_t j = 0; j < J; ++j) rows[j] = pick(rng);

    // estimate_window on the row-sampled view, without copying the panel.
    const double steps = w.n - w.tau;
    double m = 0;
    for (std::int64_t j = 0; j < J; ++j) {
      double s = 0;
      for (int l = w.tau + 1; l <= w.n; ++l) {
        s += static_cast<double>(panel.at(rows[j], l)) /
             static_cast<double>(panel.at(rows[j], l - 1));
      }
      m += s / steps;
    }
    m /= static_cast<double>(J);
    if (!(m > 1.0)) {
      ++out.skipped;
      continue;
    }
    const double N_hat = scaling_factor(m, w.tau, w.n);
    double mA = 0;
    for (std::int64_t j = 0; j < J; ++j) {
      double s = 0;
      for (int l = w.tau; l <= w.n; ++l) {
        s += static_cast<double>(panel.at(rows[j], l));
      }
      mA += s / N_hat;
    }
    mA /= static_cast<double>(J);
    out.m_hats.push_back(m);
    out.mA_hats.push_back(mA);
  }

  const std::size_t usable = out.mA_hats.size();
  if (usable < 2) {
    throw estimation_error("bootstrap produced fewer than 2 usable resamples");
  }
  double mean = 0;
  for (double x : out.mA_hats) mean += x;
  mean /= static_cast<double>(usable);
  out.mean_mA = mean;
  double ss = 0;
  for (double x : out.mA_hats) ss += (x - mean) * (x - mean);
  out.var_B = ss / static_cast<double>(usable);

  if (out.skipped > B / 5) {
    out.ci_refused = true;
    return out;
  }

  std::vector<double> centered(out.mA_hats);
  for (double& x : centered) x -= mean;
  std::sort(centered.begin(), centered.end());
  const double alpha = 1.0 - level;
  const double t_lo = empirical_quantile(centered, alpha / 2.0);
  const double t_hi = empirical_quantile(centered, 1.0 - alpha / 2.0);
  CI ci;
  ci.level = level;
  ci.method = CIMethod::bootstrap;
  if (paper_literal) {
    ci.lower = mean - t_hi;
    ci.upper = mean + t_lo;
  } else {
    ci.lower = mean - t_hi;
    ci.upper = mean - t_lo;
  }
  out.ci = ci;
  return out;
}

}  // namespace bpre
