#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bpre/laws.hpp"
#include "bpre/variance.hpp"

namespace bpre {

// Exact generation-size distributions for small chains, computed by dynamic
// programming with the environment integrated out.  Extended precision keeps
// the per-generation mass within 1e-12 of one.
using ExactPmf = std::map<std::int64_t, long double>;

struct ExactChain {
  std::vector<ExactPmf> generations;  // index 0..n
  OffspringLaw law;
};

// Finite ancestor pmf for the chain; unbounded ancestor laws are truncated
// once the missing mass falls below tail_tol and renormalized.
ExactPmf ancestor_pmf(const AncestorLaw& law, double tail_tol = 1e-14);

// BetaBernoulli transitions use the exact Beta-Binomial kernel
// P(Z' = k + i | Z = k) = BetaBin(i; k, alpha, beta); DegenerateGW uses
// convolution powers of the offspring pmf.  GammaPoisson is not supported
// here (unbounded support) - use mc_functionals.
ExactChain exact_pmf_chain(const ExactPmf& ancestor, const OffspringLaw& law,
                           int n_max);

struct ChainFunctionals {
  std::vector<double> mean;      // E[Z_l]
  std::vector<double> variance;  // Var(Z_l)
  std::vector<double> inv_mean;  // E[1/Z_l]
  // lambda_partial[k] = sum_{l<k} E[1/Z_l]; index 0..n+1 so that
  // lambda_partial[n+1] is the full computed sum.
  std::vector<double> lambda_partial;
  double lambda = 0;             // geometric-tail extrapolation of the series
  double lambda_tail_bound = 0;  // the extrapolated tail itself
  double tail_ratio = 0;         // fitted geometric ratio
};

ChainFunctionals exact_functionals(const ExactChain& chain);

// Convenience: harmonic constants (lambda, lambda_tau) for the case-(i)
// variance correction, from the exact chain of the given laws.
HarmonicConstants harmonic_constants(const OffspringLaw& offspring,
                                     const AncestorLaw& ancestor, int tau,
                                     int chain_depth = 8);

// Monte Carlo fallback for laws without an exact kernel; per-generation
// moments with their standard errors from `paths` independent trajectories.
struct MCFunctionals {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> inv_mean;
  std::vector<double> mean_se;
  std::vector<double> inv_mean_se;
  std::int64_t paths = 0;
};

MCFunctionals mc_functionals(const OffspringLaw& offspring,
                             const AncestorLaw& ancestor, int n,
                             std::int64_t paths, std::uint64_t seed,
                             int threads = 1);

}  // namespace bpre
