#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpre/laws.hpp"

namespace bpre {

struct SimConfig {
  std::int64_t replicates = 1;  // J
  int generations = 0;          // n; columns run 0..n
  std::uint64_t seed = 0;
};

// J x (n+1) matrix of generation sizes Z_{l,j}, all entries >= 1 and rows
// non-decreasing (offspring laws have no zero class).  Provenance fields are
// filled by the simulator and by the CSV reader when a sidecar is present.
class Panel {
 public:
  Panel(std::int64_t replicates, int generations)
      : J_(replicates),
        n_(generations),
        z_(static_cast<std::size_t>(replicates) * (generations + 1), 0) {}

  std::int64_t replicates() const { return J_; }
  int generations() const { return n_; }

  std::int64_t at(std::int64_t j, int l) const {
    return z_[static_cast<std::size_t>(j) * (n_ + 1) + l];
  }
  std::int64_t& at(std::int64_t j, int l) {
    return z_[static_cast<std::size_t>(j) * (n_ + 1) + l];
  }
  std::span<const std::int64_t> row(std::int64_t j) const {
    return {z_.data() + static_cast<std::size_t>(j) * (n_ + 1),
            static_cast<std::size_t>(n_ + 1)};
  }

  bool operator==(const Panel& other) const = default;

  std::uint64_t seed = 0;
  std::optional<OffspringLaw> offspring;
  std::optional<AncestorLaw> ancestor;

 private:
  std::int64_t J_;
  int n_;
  std::vector<std::int64_t> z_;
};

// One (generation, replicate) cell: draws one environment variate from the
// mixing law, then the offspring total conditionally on it.  Both parametric
// laws use the exact closed-form total (Binomial for Beta-Bernoulli, Poisson
// additivity for Gamma-Poisson), so large populations advance in O(1).
std::int64_t advance_population(std::int64_t z, const OffspringLaw& law,
                                SplitMix64& rng, int generation);

// Advances one generation for every replicate.  Substreams are keyed by
// (seed, replicate, generation), so the result does not depend on
// evaluation order.
std::vector<std::int64_t> step_generation(std::span<const std::int64_t> current,
                                          const OffspringLaw& law,
                                          std::uint64_t seed, int generation);

// Full panel; deterministic function of (cfg, laws) and independent of
// threads.  Throws count_overflow_error when a population would exceed the
// 64-bit guard (advice: reduce n).
Panel simulate_panel(const SimConfig& cfg, const OffspringLaw& offspring,
                     const AncestorLaw& ancestor, int threads = 1);

// CSV with header "replicate,generation,z", one row per cell, plus a sidecar
// "<path>.meta.json" carrying the laws and seed.
void write_panel_csv(const Panel& panel, const std::string& path);
Panel read_panel_csv(const std::string& path);

}  // namespace bpre
