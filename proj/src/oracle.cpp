#include "bpre/oracle.hpp"

#include <cmath>
#include <atomic>
#include <iterator>
#include <string>
#include <thread>

#include "bpre/errors.hpp"
#include "bpre/panel.hpp"

namespace bpre {

namespace {

constexpr std::int64_t kMaxSupport = 1'000'000;

// BetaBin(i; k, a, b) row via the ratio recurrence
//   pmf(i+1)/pmf(i) = (k-i)(a+i) / ((i+1)(b+k-i-1)),
// anchored at pmf(0) = B(a, b+k)/B(a, b).
std::vector<long double> beta_binomial_row(std::int64_t k, long double a,
                                           long double b) {
  std::vector<long double> row(k + 1);
  const long double log_p0 = std::lgamma(b + k) + std::lgamma(a + b) -
                             std::lgamma(b) - std::lgamma(a + b + k);
  row[0] = std::exp(log_p0);
  for (std::int64_t i = 0; i < k; ++i) {
    row[i + 1] = row[i] * ((k - i) * (a + i)) / ((i + 1) * (b + k - i - 1));
  }
  return row;
}

ExactPmf step_beta_bernoulli(const ExactPmf& pmf, long double a, long double b) {
  ExactPmf next;
  for (const auto& [k, p] : pmf) {
    const auto row = beta_binomial_row(k, a, b);
    for (std::int64_t i = 0; i <= k; ++i) {
      next[k + i] += p * row[i];
    }
  }
  return next;
}

ExactPmf step_degenerate(const ExactPmf& pmf, const DegenerateGW& law) {
  // Z' | Z = k is the k-fold convolution of the offspring pmf; build the
  // convolution powers incrementally across the support of the current
  // generation.
  ExactPmf next;
  std::map<std::int64_t, ExactPmf> conv_cache;
  ExactPmf conv;  // k-fold, built incrementally
  conv[0] = 1.0L;
  std::int64_t built = 0;
  for (const auto& [k, p] : pmf) {
    while (built < k) {
      ExactPmf grown;
      for (const auto& [s, q] : conv) {
        for (const auto& [count, prob] : law.pmf) {
          grown[s + count] += q * static_cast<long double>(prob);
        }
      }
      conv = std::move(grown);
      ++built;
    }
    for (const auto& [s, q] : conv) next[s] += p * q;
  }
  return next;
}

void check_mass(const ExactPmf& pmf, int generation) {
  long double total = 0;
  for (const auto& [k, p] : pmf) total += p;
  if (std::abs(static_cast<double>(total) - 1.0) > 1e-12) {
    throw estimation_error("oracle pmf mass drifted at generation " +
                           std::to_string(generation));
  }
}

// Drops a vanishing sliver of tail mass (< 1e-15 per side) and renormalizes;
// keeps the support from growing past what the transition cost can afford
// while leaving desk-scale moments exact to well below 1e-12.
void trim_tails(ExactPmf& pmf) {
  constexpr long double kSliver = 1e-15L;
  long double cut = 0;
  while (pmf.size() > 1) {
    const auto it = pmf.begin();
    if (cut + it->second > kSliver) break;
    cut += it->second;
    pmf.erase(it);
  }
  cut = 0;
  while (pmf.size() > 1) {
    const auto it = std::prev(pmf.end());
    if (cut + it->second > kSliver) break;
    cut += it->second;
    pmf.erase(it);
  }
  long double total = 0;
  for (const auto& [k, p] : pmf) total += p;
  for (auto& [k, p] : pmf) p /= total;
}

}  // namespace

ExactPmf ancestor_pmf(const AncestorLaw& law, double tail_tol) {
  validate(law);
  return std::visit(
      [tail_tol](const auto& l) -> ExactPmf {
        using T = std::decay_t<decltype(l)>;
        ExactPmf pmf;
        if constexpr (std::is_same_v<T, ConstantAncestor>) {
          pmf[l.value] = 1.0L;
          return pmf;
        } else if constexpr (std::is_same_v<T, ZeroTruncPoisson>) {
          const long double lam = zero_trunc_poisson_rate(l.target_mean);
          const long double denom = 1.0L - std::exp(-lam);
          long double term = std::exp(-lam) * lam;  // k = 1
          long double acc = 0;
          for (std::int64_t k = 1; acc < 1.0L - tail_tol && k < kMaxSupport; ++k) {
            pmf[k] = term / denom;
            acc += pmf[k];
            term *= lam / (k + 1);
          }
          for (auto& [k, p] : pmf) p /= acc;
          return pmf;
        } else if constexpr (std::is_same_v<T, ShiftedPoisson>) {
          long double term = std::exp(-static_cast<long double>(l.rate));
          long double acc = 0;
          for (std::int64_t k = 0; acc < 1.0L - tail_tol && k < kMaxSupport; ++k) {
            pmf[l.shift + k] = term;
            acc += term;
            term *= l.rate / (k + 1);
          }
          for (auto& [k, p] : pmf) p /= acc;
          return pmf;
        } else {
          const long double p_succ = l.prob;
          const int r = l.successes;
          long double term = std::pow(p_succ, r);  // k = 0 failures
          long double acc = 0;
          for (std::int64_t k = 0; acc < 1.0L - tail_tol && k < kMaxSupport; ++k) {
            pmf[l.shift + k] = term;
            acc += term;
            term *= (1.0L - p_succ) * (r + k) / (k + 1);
          }
          for (auto& [k, p] : pmf) p /= acc;
          return pmf;
        }
      },
      law);
}

ExactChain exact_pmf_chain(const ExactPmf& ancestor, const OffspringLaw& law,
                           int n_max) {
  validate(law);
  if (ancestor.empty()) throw parameter_error("ancestor pmf is empty");
  if (std::holds_alternative<GammaPoisson>(law)) {
    throw parameter_error(
        "gamma_poisson has unbounded support; use the Monte Carlo oracle");
  }
  ExactChain chain;
  chain.law = law;
  chain.generations.reserve(n_max + 1);
  chain.generations.push_back(ancestor);
  check_mass(ancestor, 0);
  for (int l = 1; l <= n_max; ++l) {
    const ExactPmf& cur = chain.generations.back();
    ExactPmf next;
    if (const auto* bb = std::get_if<BetaBernoulli>(&law)) {
      next = step_beta_bernoulli(cur, bb->alpha, bb->beta);
    } else {
      next = step_degenerate(cur, std::get<DegenerateGW>(law));
    }
    trim_tails(next);
    check_mass(next, l);
    if (next.rbegin()->first > kMaxSupport) {
      throw parameter_error("chain support exceeds " +
                            std::to_string(kMaxSupport) + " at generation " +
                            std::to_string(l) + "; reduce n_max");
    }
    chain.generations.push_back(std::move(next));
  }
  return chain;
}

ChainFunctionals exact_functionals(const ExactChain& chain) {
  ChainFunctionals out;
  const std::size_t gens = chain.generations.size();
  out.mean.resize(gens);
  out.variance.resize(gens);
  out.inv_mean.resize(gens);
  out.lambda_partial.resize(gens + 1, 0.0);
  for (std::size_t l = 0; l < gens; ++l) {
    long double m = 0, m2 = 0, inv = 0;
    for (const auto& [k, p] : chain.generations[l]) {
      m += k * p;
      m2 += static_cast<long double>(k) * k * p;
      inv += p / k;
    }
    out.mean[l] = static_cast<double>(m);
    out.variance[l] = static_cast<double>(m2 - m * m);
    out.inv_mean[l] = static_cast<double>(inv);
    out.lambda_partial[l + 1] = out.lambda_partial[l] + out.inv_mean[l];
  }

  // The harmonic series tail decays geometrically; fit the ratio on the last
  // three generations and add the resulting geometric tail.
  if (gens >= 4) {
    const double r1 = out.inv_mean[gens - 1] / out.inv_mean[gens - 2];
    const double r2 = out.inv_mean[gens - 2] / out.inv_mean[gens - 3];
    const double r3 = out.inv_mean[gens - 3] / out.inv_mean[gens - 4];
    out.tail_ratio = std::max({r1, r2, r3});
    if (out.tail_ratio < 1.0) {
      out.lambda_tail_bound =
          out.inv_mean[gens - 1] * out.tail_ratio / (1.0 - out.tail_ratio);
    }
  }
  out.lambda = out.lambda_partial[gens] + out.lambda_tail_bound;
  return out;
}

HarmonicConstants harmonic_constants(const OffspringLaw& offspring,
                                     const AncestorLaw& ancestor, int tau,
                                     int chain_depth) {
  if (tau < 0) throw parameter_error("tau must be >= 0");
  const auto chain =
      exact_pmf_chain(ancestor_pmf(ancestor), offspring, chain_depth);
  const auto fn = exact_functionals(chain);
  HarmonicConstants hc;
  hc.lambda = fn.lambda;
  if (tau <= chain_depth) {
    hc.lambda_tau = fn.lambda_partial[tau];
  } else {
    // Generations beyond the exact depth contribute the geometric tail
    // terms; extend the partial sum with the fitted ratio.
    const double rho = fn.tail_ratio;
    const double last = fn.inv_mean.back();
    double extra = 0, pw = rho;
    for (int l = chain_depth + 1; l < tau; ++l) {
      extra += last * pw;
      pw *= rho;
    }
    hc.lambda_tau = fn.lambda_partial.back() + extra;
    hc.lambda_tau = std::min(hc.lambda_tau, hc.lambda);
  }
  return hc;
}

MCFunctionals mc_functionals(const OffspringLaw& offspring,
                             const AncestorLaw& ancestor, int n,
                             std::int64_t paths, std::uint64_t seed,
                             int threads) {
  validate(offspring);
  validate(ancestor);
  if (paths < 2) throw parameter_error("need at least 2 paths");

  const int cols = n + 1;
  struct Acc {
    std::vector<long double> s1, s2, inv, inv2;
    explicit Acc(int cols) : s1(cols, 0), s2(cols, 0), inv(cols, 0), inv2(cols, 0) {}
  };

  // Fixed-size path chunks with their own accumulators; partials reduce in
  // chunk order afterwards, so results are bit-identical for any thread
  // count.
  constexpr std::int64_t kChunk = 8192;
  const std::int64_t n_chunks = (paths + kChunk - 1) / kChunk;
  std::vector<Acc> accs(n_chunks, Acc(cols));
  auto run_chunk = [&](std::int64_t chunk_idx) {
    Acc& a = accs[chunk_idx];
    const std::int64_t begin = chunk_idx * kChunk;
    const std::int64_t end = std::min(begin + kChunk, paths);
    for (std::int64_t path = begin; path < end; ++path) {
      SplitMix64 rng0 = substream(seed, static_cast<std::uint64_t>(path), 0);
      std::int64_t z = draw_ancestor(ancestor, rng0);
      for (int l = 0; l <= n; ++l) {
        if (l > 0) {
          SplitMix64 rng =
              substream(seed, static_cast<std::uint64_t>(path),
                        static_cast<std::uint64_t>(l));
          z = advance_population(z, offspring, rng, l);
        }
        const long double zf = static_cast<long double>(z);
        a.s1[l] += zf;
        a.s2[l] += zf * zf;
        a.inv[l] += 1.0L / zf;
        a.inv2[l] += 1.0L / (zf * zf);
      }
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::int64_t c = next.fetch_add(1); c < n_chunks;
             c = next.fetch_add(1)) {
          run_chunk(c);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  MCFunctionals out;
  out.paths = paths;
  out.mean.resize(cols);
  out.variance.resize(cols);
  out.inv_mean.resize(cols);
  out.mean_se.resize(cols);
  out.inv_mean_se.resize(cols);
  const long double N = static_cast<long double>(paths);
  for (int l = 0; l <= n; ++l) {
    long double s1 = 0, s2 = 0, inv = 0, inv2 = 0;
    for (const auto& a : accs) {
      s1 += a.s1[l];
      s2 += a.s2[l];
      inv += a.inv[l];
      inv2 += a.inv2[l];
    }
    const long double mean = s1 / N;
    const long double var = s2 / N - mean * mean;
    const long double invm = inv / N;
    const long double invv = inv2 / N - invm * invm;
    out.mean[l] = static_cast<double>(mean);
    out.variance[l] = static_cast<double>(var * N / (N - 1));
    out.inv_mean[l] = static_cast<double>(invm);
    out.mean_se[l] = static_cast<double>(std::sqrt(var / N));
    out.inv_mean_se[l] = static_cast<double>(std::sqrt(invv / N));
  }
  return out;
}

}  // namespace bpre
