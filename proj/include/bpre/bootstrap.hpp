#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bpre/estimators.hpp"
#include "bpre/panel.hpp"
#include "bpre/rng.hpp"
#include "bpre/variance.hpp"

namespace bpre {

struct BootstrapResult {
  std::vector<double> m_hats;   // usable resamples only
  std::vector<double> mA_hats;
  double mean_mA = 0;           // bar m_{A,B}
  double var_B = 0;             // (1/B') sum (mA_b - mean)^2
  std::optional<CI> ci;         // absent when refused
  int skipped = 0;              // resamples with m_hat <= 1
  bool ci_refused = false;      // more than 20% skipped
};

// Whole trajectories resampled with replacement, never individual cells.
Panel resample_panel(const Panel& panel, SplitMix64& rng);

// Replicate-level bootstrap of (m_hat, mA_hat).  The default interval is the
// centered-percentile form (mean - t_A(1-a/2), mean - t_A(a/2)); with
// paper_literal the upper bound uses mean + t_A(a/2) instead.
BootstrapResult bootstrap_ci(const Panel& panel, const Window& w, int B,
                             double level, std::uint64_t seed,
                             bool paper_literal = false);

// Smallest sample value t with F(t) >= alpha, where F(t) is the fraction of
// values strictly below t; values must be sorted ascending.
double empirical_quantile(const std::vector<double>& sorted, double alpha);

}  // namespace bpre
