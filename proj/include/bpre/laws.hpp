#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "bpre/rng.hpp"

namespace bpre {

// ---------------------------------------------------------------------------
// Offspring-environment laws.  Every law has P(offspring = 0) = 0, so the
// process never goes extinct and generation sizes are non-decreasing.
// ---------------------------------------------------------------------------

// offspring = 1 + Bernoulli(p), p ~ Beta(alpha, beta) drawn per
// (generation, replicate) cell.
struct BetaBernoulli {
  double alpha;
  double beta;
  bool operator==(const BetaBernoulli&) const = default;
};

// offspring = 1 + Poisson(lambda), lambda ~ Gamma(shape, scale),
// so E[lambda] = shape * scale.
struct GammaPoisson {
  double shape;
  double scale;
  bool operator==(const GammaPoisson&) const = default;
};

// Fixed offspring pmf over counts >= 1; no environment randomness
// (classical Galton-Watson).  Entries are (count, probability).
struct DegenerateGW {
  std::vector<std::pair<std::int64_t, double>> pmf;
  bool operator==(const DegenerateGW&) const = default;
};

using OffspringLaw = std::variant<BetaBernoulli, GammaPoisson, DegenerateGW>;

// ---------------------------------------------------------------------------
// Ancestor laws for Z_0.
// ---------------------------------------------------------------------------

// Poisson conditioned on being >= 1, parameterized by the *truncated* mean:
// the underlying rate solves lambda / (1 - e^-lambda) = target_mean.
struct ZeroTruncPoisson {
  double target_mean;
  bool operator==(const ZeroTruncPoisson&) const = default;
};

// shift + Poisson(rate); "1 + Poisson" ancestors are ShiftedPoisson{1, m-1}.
struct ShiftedPoisson {
  std::int64_t shift;
  double rate;
  bool operator==(const ShiftedPoisson&) const = default;
};

// shift + NegBinomial(successes r, success prob p) counting failures before
// the r-th success; mean = shift + r(1-p)/p, variance = r(1-p)/p^2.
struct ShiftedNegBinomial {
  std::int64_t shift;
  int successes;
  double prob;
  bool operator==(const ShiftedNegBinomial&) const = default;
};

struct ConstantAncestor {
  std::int64_t value;
  bool operator==(const ConstantAncestor&) const = default;
};

using AncestorLaw = std::variant<ZeroTruncPoisson, ShiftedPoisson,
                                 ShiftedNegBinomial, ConstantAncestor>;

// ---------------------------------------------------------------------------
// Exact population moments.
// ---------------------------------------------------------------------------

// Marginal moments of the conditional offspring mean m_{0,1} and variance:
//   m_star  = E[m_{0,1}]            (marginal offspring mean, > 1)
//   m2_star = E[m_{0,1}^2]
//   sigma2_star = Var[m_{0,1}]      (between-environment variance)
//   gamma2_star = E[sigma^2_{0,1}]  (marginal within-environment variance)
//   r_star  = sqrt(m2_star) / m_star  (square root of the CV; >= 1)
//   m4_star = E[m_{0,1}^4] where a closed form exists
struct TheoreticalMoments {
  double m_star;
  double m2_star;
  double sigma2_star;
  double gamma2_star;
  double r_star;
  std::optional<double> m4_star;
};

struct AncestorMoments {
  double mean;      // m_A >= 1
  double variance;  // sigma_A^2 >= 0
};

void validate(const OffspringLaw& law);
void validate(const AncestorLaw& law);

TheoreticalMoments offspring_moments(const OffspringLaw& law);
AncestorMoments ancestor_moments(const AncestorLaw& law);

// Rate of the zero-truncated Poisson whose truncated mean equals target_mean;
// Newton iteration, residual below 1e-12.
double zero_trunc_poisson_rate(double target_mean);

// One ancestor count (>= 1).
std::int64_t draw_ancestor(const AncestorLaw& law, SplitMix64& rng);

// One offspring count under a freshly drawn environment (population size 1).
std::int64_t draw_single_offspring(const OffspringLaw& law, SplitMix64& rng);

}  // namespace bpre
