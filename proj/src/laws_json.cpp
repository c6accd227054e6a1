#include "bpre/laws_json.hpp"

#include "bpre/errors.hpp"

namespace bpre {

using nlohmann::json;

json offspring_to_json(const OffspringLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BetaBernoulli>) {
          return {{"kind", "beta_bernoulli"}, {"alpha", l.alpha}, {"beta", l.beta}};
        } else if constexpr (std::is_same_v<T, GammaPoisson>) {
          return {{"kind", "gamma_poisson"}, {"shape", l.shape}, {"scale", l.scale}};
        } else {
          json pmf = json::array();
          for (const auto& [count, prob] : l.pmf) pmf.push_back({count, prob});
          return {{"kind", "degenerate_gw"}, {"pmf", pmf}};
        }
      },
      law);
}

OffspringLaw offspring_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "beta_bernoulli") {
      return BetaBernoulli{j.at("alpha").get<double>(), j.at("beta").get<double>()};
    }
    if (kind == "gamma_poisson") {
      return GammaPoisson{j.at("shape").get<double>(), j.at("scale").get<double>()};
    }
    if (kind == "degenerate_gw") {
      DegenerateGW law;
      for (const auto& entry : j.at("pmf")) {
        law.pmf.emplace_back(entry.at(0).get<std::int64_t>(),
                             entry.at(1).get<double>());
      }
      return law;
    }
    throw parse_error("unknown offspring kind: " + kind);
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad offspring law: ") + e.what());
  }
}

json ancestor_to_json(const AncestorLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ZeroTruncPoisson>) {
          return {{"kind", "zero_trunc_poisson"}, {"mean", l.target_mean}};
        } else if constexpr (std::is_same_v<T, ShiftedPoisson>) {
          return {{"kind", "shifted_poisson"}, {"shift", l.shift}, {"rate", l.rate}};
        } else if constexpr (std::is_same_v<T, ShiftedNegBinomial>) {
          return {{"kind", "shifted_neg_binomial"},
                  {"shift", l.shift},
                  {"successes", l.successes},
                  {"prob", l.prob}};
        } else {
          return {{"kind", "constant"}, {"value", l.value}};
        }
      },
      law);
}

AncestorLaw ancestor_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero_trunc_poisson") {
      return ZeroTruncPoisson{j.at("mean").get<double>()};
    }
    if (kind == "shifted_poisson") {
      return ShiftedPoisson{j.at("shift").get<std::int64_t>(),
                            j.at("rate").get<double>()};
    }
    if (kind == "shifted_neg_binomial") {
      return ShiftedNegBinomial{j.at("shift").get<std::int64_t>(),
                                j.at("successes").get<int>(),
                                j.at("prob").get<double>()};
    }
    if (kind == "constant") {
      return ConstantAncestor{j.at("value").get<std::int64_t>()};
    }
    throw parse_error("unknown ancestor kind: " + kind);
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad ancestor law: ") + e.what());
  }
}

}  // namespace bpre
