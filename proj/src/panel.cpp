#include "bpre/panel.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bpre/errors.hpp"
#include "bpre/laws_json.hpp"

namespace bpre {

namespace {

// Populations beyond this are one generation away from wrapping int64.
constexpr std::int64_t kCountGuard = std::int64_t{1} << 61;

[[noreturn]] void overflow(int generation) {
  throw count_overflow_error(
      "population count overflow at generation " + std::to_string(generation) +
      "; rerun with a smaller n");
}

}  // namespace

std::int64_t advance_population(std::int64_t z, const OffspringLaw& law,
                                SplitMix64& rng, int generation) {
  if (z >= kCountGuard) overflow(generation);
  return std::visit(
      [&](const auto& l) -> std::int64_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BetaBernoulli>) {
          std::gamma_distribution<double> ga(l.alpha, 1.0);
          std::gamma_distribution<double> gb(l.beta, 1.0);
          const double x = ga(rng);
          const double y = gb(rng);
          const double p = x / (x + y);
          std::binomial_distribution<std::int64_t> bin(z, p);
          return z + bin(rng);
        } else if constexpr (std::is_same_v<T, GammaPoisson>) {
          std::gamma_distribution<double> g(l.shape, l.scale);
          const double lambda = g(rng);
          const double mean = static_cast<double>(z) * lambda;
          if (mean >= static_cast<double>(kCountGuard)) overflow(generation);
          std::poisson_distribution<std::int64_t> pois(mean);
          return z + pois(rng);
        } else {
          if (l.pmf.size() == 1) {
            const std::int64_t c = l.pmf.front().first;
            if (z > kCountGuard / c) overflow(generation);
            return z * c;
          }
          std::int64_t total = 0;
          std::uniform_real_distribution<double> u(0.0, 1.0);
          for (std::int64_t k = 0; k < z; ++k) {
            double r = u(rng);
            std::int64_t draw = l.pmf.back().first;
            for (const auto& [count, prob] : l.pmf) {
              r -= prob;
              if (r <= 0.0) {
                draw = count;
                break;
              }
            }
            total += draw;
            if (total >= kCountGuard) overflow(generation);
          }
          return total;
        }
      },
      law);
}

std::vector<std::int64_t> step_generation(std::span<const std::int64_t> current,
                                          const OffspringLaw& law,
                                          std::uint64_t seed, int generation) {
  validate(law);
  std::vector<std::int64_t> next(current.size());
  for (std::size_t j = 0; j < current.size(); ++j) {
    if (current[j] < 1) {
      throw parameter_error("population sizes must be >= 1");
    }
    SplitMix64 rng = substream(seed, j, static_cast<std::uint64_t>(generation));
    next[j] = advance_population(current[j], law, rng, generation);
  }
  return next;
}

Panel simulate_panel(const SimConfig& cfg, const OffspringLaw& offspring,
                     const AncestorLaw& ancestor, int threads) {
  if (cfg.replicates < 1) throw parameter_error("replicates must be >= 1");
  if (cfg.generations < 0) throw parameter_error("generations must be >= 0");
  validate(offspring);
  validate(ancestor);

  Panel panel(cfg.replicates, cfg.generations);
  panel.seed = cfg.seed;
  panel.offspring = offspring;
  panel.ancestor = ancestor;

  // Each replicate's trajectory is a pure function of (seed, j), so any
  // partition of the replicate range yields the same panel.
  auto run_rows = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t j = begin; j < end; ++j) {
      SplitMix64 rng0 = substream(cfg.seed, j, 0);
      panel.at(j, 0) = draw_ancestor(ancestor, rng0);
      for (int l = 1; l <= cfg.generations; ++l) {
        SplitMix64 rng = substream(cfg.seed, j, static_cast<std::uint64_t>(l));
        panel.at(j, l) = advance_population(panel.at(j, l - 1), offspring, rng, l);
      }
    }
  };

  if (threads <= 1 || cfg.replicates < 2 * threads) {
    run_rows(0, cfg.replicates);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::int64_t chunk = (cfg.replicates + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t begin = t * chunk;
      const std::int64_t end = std::min<std::int64_t>(begin + chunk, cfg.replicates);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          run_rows(begin, end);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  return panel;
}

void write_panel_csv(const Panel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing: " + path);
  out << "replicate,generation,z\n";
  for (std::int64_t j = 0; j < panel.replicates(); ++j) {
    for (int l = 0; l <= panel.generations(); ++l) {
      out << j << ',' << l << ',' << panel.at(j, l) << '\n';
    }
  }
  if (panel.offspring && panel.ancestor) {
    nlohmann::json meta = {
        {"offspring", offspring_to_json(*panel.offspring)},
        {"ancestor", ancestor_to_json(*panel.ancestor)},
        {"seed", panel.seed},
    };
    std::ofstream side(path + ".meta.json");
    side << meta.dump(2) << '\n';
  }
}

Panel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("replicate,generation,z", 0) != 0) {
    throw parse_error(path + ": expected header 'replicate,generation,z'");
  }
  struct Cell {
    std::int64_t j;
    int l;
    std::int64_t z;
  };
  std::vector<Cell> cells;
  std::int64_t max_j = -1;
  int max_l = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Cell c;
    char comma1 = 0, comma2 = 0;
    if (!(ss >> c.j >> comma1 >> c.l >> comma2 >> c.z) || comma1 != ',' ||
        comma2 != ',') {
      throw parse_error(path + ":" + std::to_string(line_no) + ": bad row");
    }
    if (c.z < 1) {
      throw parse_error(path + ":" + std::to_string(line_no) +
                        ": population counts must be >= 1");
    }
    max_j = std::max(max_j, c.j);
    max_l = std::max(max_l, c.l);
    cells.push_back(c);
  }
  if (cells.empty()) throw parse_error(path + ": no rows");
  Panel panel(max_j + 1, max_l);
  if (cells.size() != static_cast<std::size_t>((max_j + 1)) * (max_l + 1)) {
    throw parse_error(path + ": ragged panel (missing cells)");
  }
  std::vector<bool> seen(cells.size(), false);
  for (const auto& c : cells) {
    const std::size_t slot = static_cast<std::size_t>(c.j) * (max_l + 1) + c.l;
    if (seen[slot]) {
      throw parse_error(path + ": duplicate cell (" + std::to_string(c.j) +
                        ", " + std::to_string(c.l) + ")");
    }
    seen[slot] = true;
    panel.at(c.j, c.l) = c.z;
  }
  std::ifstream side(path + ".meta.json");
  if (side) {
    try {
      nlohmann::json meta = nlohmann::json::parse(side);
      panel.offspring = offspring_from_json(meta.at("offspring"));
      panel.ancestor = ancestor_from_json(meta.at("ancestor"));
      panel.seed = meta.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(path + ".meta.json: " + e.what());
    }
  }
  return panel;
}

}  // namespace bpre
