#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bpre/estimators.hpp"
#include "bpre/laws.hpp"
#include "bpre/panel.hpp"

namespace bpre {

// Partial and total sums of E[Z_l^-1]; lambda_tau = sum_{l < tau}, lambda the
// full series.  Needed only for the case-(i) variance correction.
struct HarmonicConstants {
  double lambda = 0;
  double lambda_tau = 0;
};

// Limiting-variance constants for the scaled ancestor-mean estimator.
struct AsymptoticConstants {
  double frak_D = 0;      // limit of the D_n sequence
  double sigma_I2 = 0;    // diverging-window variance
  double sigma_F2 = 0;    // fixed-window variance at the supplied delta
  double sigma_tau2 = 0;  // the constant selected by the sampling case
  double lambda = 0;
  double lambda_tau = 0;
};

struct VarianceReport {
  double per_replicate_var = 0;  // (1/(J-1)) sum_j (N^-1 S_j - mA_hat)^2
  double lambda_hat = 0;         // per_replicate_var / J ~ Var(mA_hat)
  double kappa_tilde = 0;        // last-two variance estimate of D/m2*
  double frak_D_tilde = 0;       // m2_tilde * kappa_tilde
  std::optional<double> lambda_exact;  // filled when the laws are known
};

enum class CIMethod { gaussian, student_t, bootstrap };

struct CI {
  double lower = 0;
  double upper = 0;
  double level = 0.95;
  CIMethod method = CIMethod::gaussian;
};

enum class ModelKind { beta_bernoulli, gamma_poisson };

// ---------------------------------------------------------------------------
// Population constants.
// ---------------------------------------------------------------------------

// D = mA g2* / (1 - (r*^2 m*)^-1) + (mA^2 + sA^2) s2* / (1 - r*^-2);
// reduces to mA g2* m* / (m* - 1) in the Galton-Watson case r* = 1.
double frak_D(const TheoreticalMoments& tm, const AncestorMoments& am);

// Finite-n D_n, nondecreasing to frak_D.
double frak_D_n(const TheoreticalMoments& tm, const AncestorMoments& am, int n);

double sigma_I2(const TheoreticalMoments& tm, const AncestorMoments& am);
double sigma_F2(const TheoreticalMoments& tm, const AncestorMoments& am,
                int delta);

// Assembles the constants and picks sigma_tau2 for the sampling case;
// case (i) requires harmonic constants, case (ii) requires delta_m.
AsymptoticConstants asymptotic_constants(
    const TheoreticalMoments& tm, const AncestorMoments& am, SchemeCase scheme,
    std::optional<int> delta_m = std::nullopt,
    std::optional<HarmonicConstants> harmonic = std::nullopt);

// Var(Z_l) = m2*^(l-1) D_l + m*^(2l) sA^2 for l >= 1, sA^2 at l = 0.
double var_Z(const TheoreticalMoments& tm, const AncestorMoments& am, int l);

struct ExactVariances {
  std::vector<double> var_z;  // index l = 0..n
  double lambda = 0;          // Lambda_{tau,n,J}: true variance of mA_hat
};

ExactVariances exact_finite_variances(const TheoreticalMoments& tm,
                                      const AncestorMoments& am,
                                      const Window& w, std::int64_t J);

// ---------------------------------------------------------------------------
// Empirical estimates from a panel.
// ---------------------------------------------------------------------------

VarianceReport empirical_variance(const Panel& panel, const Window& w,
                                  const EstimateSet& est);

// Parametric inversion of D for the ancestor variance; gamma2* is not
// identifiable from BPRE data alone, so the offspring family must be named.
double estimate_sigmaA2(const EstimateSet& last_two, double kappa_tilde,
                        ModelKind kind);

// Variance of the relative-quantitation ratio; v_T and v_C are the
// per-replicate variances (before their 1/J).
double ratio_variance(double R_hat, const EstimateSet& est_T,
                      const EstimateSet& est_C, double v_T, double v_C,
                      std::int64_t J);

CI build_ci(double point, double variance, std::int64_t J, CIMethod method,
            double level);

}  // namespace bpre
