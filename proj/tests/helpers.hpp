#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "bpre/panel.hpp"

namespace bpre::testing {

inline Panel make_panel(std::initializer_list<std::vector<std::int64_t>> rows) {
  const auto first = rows.begin();
  Panel panel(static_cast<std::int64_t>(rows.size()),
              static_cast<int>(first->size()) - 1);
  std::int64_t j = 0;
  for (const auto& row : rows) {
    for (std::size_t l = 0; l < row.size(); ++l) {
      panel.at(j, static_cast<int>(l)) = row[l];
    }
    ++j;
  }
  return panel;
}

// Pearson chi-square statistic against exact cell probabilities.
inline double chi_square(const std::vector<std::int64_t>& observed,
                         const std::vector<double>& probs, std::int64_t total) {
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(total);
    const double d = static_cast<double>(observed[i]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// Anderson-Darling A^2 against the normal with estimated mean and variance
// (D'Agostino & Stephens case 3), with the small-sample modification.
// 1% critical value: 1.035.
inline double anderson_darling_normal(std::vector<double> x) {
  const std::size_t n = x.size();
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::sort(x.begin(), x.end());
  double a2 = -static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (x[i] - mean) / sd;
    const double phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double zr = (x[n - 1 - i] - mean) / sd;
    const double phir = 0.5 * std::erfc(-zr / std::numbers::sqrt2);
    a2 -= (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) *
          (std::log(phi) + std::log1p(-phir));
  }
  return a2 * (1.0 + 0.75 / static_cast<double>(n) +
               2.25 / static_cast<double>(n * n));
}

inline double sample_mean(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

// Standard error of the sample variance from the fourth central moment.
inline double variance_se(const std::vector<double>& x) {
  const double m = sample_mean(x);
  const double n = static_cast<double>(x.size());
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  return std::sqrt((m4 - m2 * m2) / n);
}

}  // namespace bpre::testing
