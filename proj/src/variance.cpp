#include "bpre/variance.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "bpre/errors.hpp"

namespace bpre {

namespace {

constexpr double kGWTol = 1e-12;

bool is_gw(const TheoreticalMoments& tm) {
  return std::abs(tm.r_star - 1.0) < kGWTol;
}

void check_moments(const TheoreticalMoments& tm) {
  if (!(tm.m_star > 1.0)) {
    throw parameter_error("marginal offspring mean must exceed 1");
  }
  if (is_gw(tm) && tm.sigma2_star > kGWTol) {
    throw parameter_error("r* = 1 with sigma2* > 0 is inconsistent");
  }
}

// sum_{i=0}^{l-1} q^i with the q = 1 limit.
double geometric_partial(double q, int l) {
  if (std::abs(q - 1.0) < 1e-14) return static_cast<double>(l);
  return (1.0 - std::pow(q, l)) / (1.0 - q);
}

}  // namespace

double frak_D(const TheoreticalMoments& tm, const AncestorMoments& am) {
  check_moments(tm);
  if (is_gw(tm)) {
    return am.mean * tm.gamma2_star * tm.m_star / (tm.m_star - 1.0);
  }
  const double r2 = tm.m2_star / (tm.m_star * tm.m_star);
  return am.mean * tm.gamma2_star / (1.0 - 1.0 / (r2 * tm.m_star)) +
         (am.mean * am.mean + am.variance) * tm.sigma2_star / (1.0 - 1.0 / r2);
}

double frak_D_n(const TheoreticalMoments& tm, const AncestorMoments& am, int n) {
  check_moments(tm);
  const double r2 = tm.m2_star / (tm.m_star * tm.m_star);
  const double term1 =
      am.mean * tm.gamma2_star * geometric_partial(1.0 / (r2 * tm.m_star), n);
  const double term2 = (am.mean * am.mean + am.variance) * tm.sigma2_star *
                       geometric_partial(1.0 / r2, n);
  return term1 + term2;
}

double sigma_I2(const TheoreticalMoments& tm, const AncestorMoments& am) {
  check_moments(tm);
  const double D = frak_D(tm, am);
  if (is_gw(tm)) return D / (tm.m_star * tm.m_star);
  const double m = tm.m_star, m2 = tm.m2_star;
  return D * (m - 1.0) * (m - 1.0) * (m2 + m) /
         (m * m * (m2 - m) * (m2 - 1.0));
}

double sigma_F2(const TheoreticalMoments& tm, const AncestorMoments& am,
                int delta) {
  check_moments(tm);
  if (delta < 0) throw parameter_error("delta must be >= 0");
  const double D = frak_D(tm, am);
  if (is_gw(tm)) return D / (tm.m_star * tm.m_star);
  const double m = tm.m_star, m2 = tm.m2_star;
  const double md2 = std::pow(m, delta + 2);
  const double m2d1 = std::pow(m2, delta + 1);
  const double front =
      D * (m - 1.0) * std::pow(m, 2 * delta + 2) / (m2d1 * (md2 - m) * (md2 - m));
  const double bracket = (2.0 * m * m2d1 - 2.0 * md2) / (m2 - m) -
                         (m + 1.0) * (m2d1 - 1.0) / (m2 - 1.0);
  return front * bracket;
}

AsymptoticConstants asymptotic_constants(
    const TheoreticalMoments& tm, const AncestorMoments& am, SchemeCase scheme,
    std::optional<int> delta_m, std::optional<HarmonicConstants> harmonic) {
  AsymptoticConstants out;
  out.frak_D = frak_D(tm, am);
  out.sigma_I2 = sigma_I2(tm, am);
  out.sigma_F2 = sigma_F2(tm, am, delta_m.value_or(0));

  switch (scheme) {
    case SchemeCase::case_i: {
      if (!harmonic) {
        throw parameter_error(
            "case (i) needs harmonic constants (lambda, lambda_tau)");
      }
      out.lambda = harmonic->lambda;
      out.lambda_tau = harmonic->lambda_tau;
      if (out.lambda < out.lambda_tau) {
        throw parameter_error("lambda_tau exceeds lambda");
      }
      out.sigma_tau2 =
          std::exp((out.lambda - out.lambda_tau) * tm.gamma2_star / tm.m2_star) *
          out.sigma_I2;
      break;
    }
    case SchemeCase::case_ii:
      if (!delta_m) throw parameter_error("case (ii) needs delta_m");
      out.sigma_tau2 = out.sigma_F2;
      break;
    case SchemeCase::case_iii:
      out.sigma_tau2 = out.sigma_I2;
      break;
  }
  return out;
}

double var_Z(const TheoreticalMoments& tm, const AncestorMoments& am, int l) {
  if (l < 0) throw parameter_error("generation must be >= 0");
  if (l == 0) return am.variance;
  return std::pow(tm.m2_star, l - 1) * frak_D_n(tm, am, l) +
         std::pow(tm.m_star, 2 * l) * am.variance;
}

ExactVariances exact_finite_variances(const TheoreticalMoments& tm,
                                      const AncestorMoments& am,
                                      const Window& w, std::int64_t J) {
  check_moments(tm);
  if (J < 1) throw parameter_error("J must be >= 1");
  ExactVariances out;
  out.var_z.resize(w.n + 1);
  for (int l = 0; l <= w.n; ++l) out.var_z[l] = var_Z(tm, am, l);

  const double N_star = scaling_factor(tm.m_star, w.tau, w.n);
  double acc = 0;
  for (int l = w.tau; l <= w.n; ++l) {
    // 1 + 2 sum_{k=1}^{n-l} m*^k
    double weight = 1.0, pw = tm.m_star;
    for (int k = 1; k <= w.n - l; ++k) {
      weight += 2.0 * pw;
      pw *= tm.m_star;
    }
    acc += weight * out.var_z[l];
  }
  out.lambda = acc / (static_cast<double>(J) * N_star * N_star);
  return out;
}

VarianceReport empirical_variance(const Panel& panel, const Window& w,
                                  const EstimateSet& est) {
  const std::int64_t J = panel.replicates();
  if (J < 2) throw estimation_error("empirical variance needs J >= 2");

  VarianceReport out;
  const auto sums = scaled_window_sums(panel, w, est.scaling_N_hat);
  double ss = 0;
  for (double x : sums) {
    const double d = x - est.mA_hat;
    ss += d * d;
  }
  out.per_replicate_var = ss / static_cast<double>(J - 1);
  out.lambda_hat = out.per_replicate_var / static_cast<double>(J);

  // kappa and D are estimated from the last two generations.
  const EstimateSet lt = estimate_last_two(panel, w.n);
  const double scale = std::pow(lt.r_hat, -2.0 * w.n);
  double dev = 0;
  for (std::int64_t j = 0; j < J; ++j) {
    const double d =
        static_cast<double>(panel.at(j, w.n)) / lt.scaling_N_hat - lt.mA_hat;
    dev += d * d;
  }
  out.kappa_tilde = scale * dev / static_cast<double>(J);
  out.frak_D_tilde = lt.m2_hat * out.kappa_tilde;
  return out;
}

double estimate_sigmaA2(const EstimateSet& last_two, double kappa_tilde,
                        ModelKind kind) {
  const double m = last_two.m_hat, m2 = last_two.m2_hat;
  const double r2 = m2 / (m * m);
  if (m2 <= m * m) {
    throw estimation_error(
        "m2_tilde <= m_tilde^2 (jensen_violation): ancestor-variance "
        "inversion is degenerate");
  }
  if (std::abs(m * r2 - 1.0) < 1e-12) {
    throw estimation_error("m_tilde r_tilde^2 = 1: inversion unstable");
  }
  double gamma2 = 0;
  switch (kind) {
    case ModelKind::beta_bernoulli:
      gamma2 = 3.0 * m - m2 - 2.0;
      break;
    case ModelKind::gamma_poisson:
      gamma2 = m - 1.0;
      break;
  }
  const double D_tilde = m2 * kappa_tilde;
  return (1.0 - 1.0 / r2) / (m2 - m * m) *
             (D_tilde - last_two.mA_hat * gamma2 / (1.0 - 1.0 / (m * r2))) -
         last_two.mA_hat * last_two.mA_hat;
}

double ratio_variance(double R_hat, const EstimateSet& est_T,
                      const EstimateSet& est_C, double v_T, double v_C,
                      std::int64_t J) {
  if (!(est_T.mA_hat > 0.0) || !(est_C.mA_hat > 0.0)) {
    throw estimation_error("ratio variance needs positive ancestor estimates");
  }
  if (J < 1) throw parameter_error("J must be >= 1");
  return R_hat * R_hat / static_cast<double>(J) *
         (v_T / (est_T.mA_hat * est_T.mA_hat) +
          v_C / (est_C.mA_hat * est_C.mA_hat));
}

CI build_ci(double point, double variance, std::int64_t J, CIMethod method,
            double level) {
  if (variance < 0.0) throw parameter_error("variance must be >= 0");
  if (!(level > 0.0 && level < 1.0)) {
    throw parameter_error("level must lie in (0,1)");
  }
  const double p = 0.5 * (1.0 + level);
  double q;
  switch (method) {
    case CIMethod::gaussian:
      q = boost::math::quantile(boost::math::normal_distribution<>(), p);
      break;
    case CIMethod::student_t: {
      if (J < 2) throw parameter_error("student_t CI needs J >= 2");
      boost::math::students_t_distribution<> t(static_cast<double>(J - 1));
      q = boost::math::quantile(t, p);
      break;
    }
    default:
      throw parameter_error("build_ci handles gaussian and student_t only");
  }
  const double half = q * std::sqrt(variance);
  return CI{point - half, point + half, level, method};
}

}  // namespace bpre
