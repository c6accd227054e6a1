#include "bpre/laws.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bpre/errors.hpp"

namespace bpre {

namespace {

constexpr double kPmfTol = 1e-12;

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw parameter_error(std::string(name) + " must be strictly positive");
  }
}

// E[p^k] for p ~ Beta(a, b): prod_{i<k} (a+i)/(a+b+i).
double beta_raw_moment(double a, double b, int k) {
  double m = 1.0;
  for (int i = 0; i < k; ++i) m *= (a + i) / (a + b + i);
  return m;
}

// E[x^k] for x ~ Gamma(shape, scale): scale^k prod_{i<k} (shape+i).
double gamma_raw_moment(double shape, double scale, int k) {
  double m = 1.0;
  for (int i = 0; i < k; ++i) m *= scale * (shape + i);
  return m;
}

}  // namespace

void validate(const OffspringLaw& law) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BetaBernoulli>) {
          require_positive(l.alpha, "alpha");
          require_positive(l.beta, "beta");
        } else if constexpr (std::is_same_v<T, GammaPoisson>) {
          require_positive(l.shape, "shape");
          require_positive(l.scale, "scale");
        } else {
          if (l.pmf.empty()) throw parameter_error("degenerate_gw pmf is empty");
          double total = 0.0;
          for (const auto& [count, prob] : l.pmf) {
            if (count < 1) {
              throw parameter_error("degenerate_gw support must be >= 1");
            }
            if (prob < 0.0 || !std::isfinite(prob)) {
              throw parameter_error("degenerate_gw probabilities must be >= 0");
            }
            total += prob;
          }
          if (std::abs(total - 1.0) > kPmfTol) {
            throw parameter_error("degenerate_gw pmf must sum to 1");
          }
        }
      },
      law);
}

void validate(const AncestorLaw& law) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZeroTruncPoisson>) {
          if (!(l.target_mean > 1.0)) {
            throw parameter_error("zero_trunc_poisson mean must exceed 1");
          }
        } else if constexpr (std::is_same_v<T, ShiftedPoisson>) {
          if (l.shift < 0) throw parameter_error("shift must be >= 0");
          require_positive(l.rate, "rate");
        } else if constexpr (std::is_same_v<T, ShiftedNegBinomial>) {
          if (l.shift < 0) throw parameter_error("shift must be >= 0");
          if (l.successes < 1) throw parameter_error("successes must be >= 1");
          if (!(l.prob > 0.0 && l.prob < 1.0)) {
            throw parameter_error("success probability must lie in (0,1)");
          }
        } else {
          if (l.value < 1) throw parameter_error("constant ancestor must be >= 1");
        }
        // Ancestors start at least one individual: implied mean >= 1.
      },
      law);
}

TheoreticalMoments offspring_moments(const OffspringLaw& law) {
  validate(law);
  return std::visit(
      [](const auto& l) -> TheoreticalMoments {
        using T = std::decay_t<decltype(l)>;
        TheoreticalMoments tm;
        if constexpr (std::is_same_v<T, BetaBernoulli>) {
          const double e1 = beta_raw_moment(l.alpha, l.beta, 1);
          const double e2 = beta_raw_moment(l.alpha, l.beta, 2);
          const double e3 = beta_raw_moment(l.alpha, l.beta, 3);
          const double e4 = beta_raw_moment(l.alpha, l.beta, 4);
          tm.m_star = 1.0 + e1;
          tm.sigma2_star = e2 - e1 * e1;
          tm.m2_star = tm.m_star * tm.m_star + tm.sigma2_star;
          tm.gamma2_star = e1 - e2;  // E[p(1-p)], equals 3 m* - m2* - 2
          tm.m4_star = 1.0 + 4.0 * e1 + 6.0 * e2 + 4.0 * e3 + e4;
        } else if constexpr (std::is_same_v<T, GammaPoisson>) {
          const double e1 = gamma_raw_moment(l.shape, l.scale, 1);
          const double e2 = gamma_raw_moment(l.shape, l.scale, 2);
          const double e3 = gamma_raw_moment(l.shape, l.scale, 3);
          const double e4 = gamma_raw_moment(l.shape, l.scale, 4);
          tm.m_star = 1.0 + e1;
          tm.sigma2_star = e2 - e1 * e1;
          tm.m2_star = tm.m_star * tm.m_star + tm.sigma2_star;
          tm.gamma2_star = e1;  // E[lambda] = m* - 1
          tm.m4_star = 1.0 + 4.0 * e1 + 6.0 * e2 + 4.0 * e3 + e4;
        } else {
          // Deterministic environment: m_{0,1} is the constant pmf mean.
          double m1 = 0.0, m2 = 0.0;
          for (const auto& [count, prob] : l.pmf) {
            const double c = static_cast<double>(count);
            m1 += c * prob;
            m2 += c * c * prob;
          }
          tm.m_star = m1;
          tm.sigma2_star = 0.0;
          tm.m2_star = m1 * m1;
          tm.gamma2_star = m2 - m1 * m1;  // within-law offspring variance
          tm.m4_star = m1 * m1 * m1 * m1;
        }
        tm.r_star = std::sqrt(tm.m2_star) / tm.m_star;
        return tm;
      },
      law);
}

double zero_trunc_poisson_rate(double target_mean) {
  if (!(target_mean > 1.0)) {
    throw parameter_error("truncated mean must exceed 1");
  }
  // f(lambda) = lambda / (1 - e^-lambda) is increasing from 1; Newton from
  // the untruncated guess converges in a handful of steps.
  double lam = target_mean;
  for (int it = 0; it < 100; ++it) {
    const double em = std::exp(-lam);
    const double denom = 1.0 - em;
    const double f = lam / denom - target_mean;
    if (std::abs(f) < 1e-13) break;
    const double df = (denom - lam * em) / (denom * denom);
    lam -= f / df;
  }
  const double residual = lam / (1.0 - std::exp(-lam)) - target_mean;
  if (std::abs(residual) > 1e-10) {
    throw parameter_error("zero-truncated Poisson rate solve did not converge");
  }
  return lam;
}

AncestorMoments ancestor_moments(const AncestorLaw& law) {
  validate(law);
  return std::visit(
      [](const auto& l) -> AncestorMoments {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZeroTruncPoisson>) {
          const double lam = zero_trunc_poisson_rate(l.target_mean);
          const double denom = 1.0 - std::exp(-lam);
          const double mean = lam / denom;
          const double ex2 = (lam + lam * lam) / denom;
          return {mean, ex2 - mean * mean};
        } else if constexpr (std::is_same_v<T, ShiftedPoisson>) {
          return {static_cast<double>(l.shift) + l.rate, l.rate};
        } else if constexpr (std::is_same_v<T, ShiftedNegBinomial>) {
          const double q = 1.0 - l.prob;
          const double mean = static_cast<double>(l.shift) + l.successes * q / l.prob;
          const double var = l.successes * q / (l.prob * l.prob);
          return {mean, var};
        } else {
          return {static_cast<double>(l.value), 0.0};
        }
      },
      law);
}

std::int64_t draw_ancestor(const AncestorLaw& law, SplitMix64& rng) {
  return std::visit(
      [&rng](const auto& l) -> std::int64_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZeroTruncPoisson>) {
          const double lam = zero_trunc_poisson_rate(l.target_mean);
          std::poisson_distribution<std::int64_t> pois(lam);
          std::int64_t z = 0;
          do {
            z = pois(rng);
          } while (z == 0);
          return z;
        } else if constexpr (std::is_same_v<T, ShiftedPoisson>) {
          std::poisson_distribution<std::int64_t> pois(l.rate);
          return l.shift + pois(rng);
        } else if constexpr (std::is_same_v<T, ShiftedNegBinomial>) {
          std::negative_binomial_distribution<std::int64_t> nb(l.successes, l.prob);
          return l.shift + nb(rng);
        } else {
          return l.value;
        }
      },
      law);
}

std::int64_t draw_single_offspring(const OffspringLaw& law, SplitMix64& rng) {
  return std::visit(
      [&rng](const auto& l) -> std::int64_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BetaBernoulli>) {
          std::gamma_distribution<double> ga(l.alpha, 1.0);
          std::gamma_distribution<double> gb(l.beta, 1.0);
          const double x = ga(rng);
          const double y = gb(rng);
          const double p = x / (x + y);
          std::bernoulli_distribution bern(p);
          return 1 + (bern(rng) ? 1 : 0);
        } else if constexpr (std::is_same_v<T, GammaPoisson>) {
          std::gamma_distribution<double> g(l.shape, l.scale);
          std::poisson_distribution<std::int64_t> pois(g(rng));
          return 1 + pois(rng);
        } else {
          std::uniform_real_distribution<double> u(0.0, 1.0);
          double r = u(rng);
          for (const auto& [count, prob] : l.pmf) {
            r -= prob;
            if (r <= 0.0) return count;
          }
          return l.pmf.back().first;
        }
      },
      law);
}

}  // namespace bpre
