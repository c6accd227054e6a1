#pragma once

#include <json.hpp>

#include "bpre/laws.hpp"

namespace bpre {

// Wire format, e.g.
//   {"kind": "beta_bernoulli", "alpha": 90, "beta": 10}
//   {"kind": "gamma_poisson", "shape": 10, "scale": 0.03}
//   {"kind": "degenerate_gw", "pmf": [[2, 1.0]]}
//   {"kind": "zero_trunc_poisson", "mean": 10}
//   {"kind": "shifted_poisson", "shift": 1, "rate": 999}
//   {"kind": "shifted_neg_binomial", "shift": 4, "successes": 4, "prob": 0.4}
//   {"kind": "constant", "value": 1}
nlohmann::json offspring_to_json(const OffspringLaw& law);
OffspringLaw offspring_from_json(const nlohmann::json& j);
nlohmann::json ancestor_to_json(const AncestorLaw& law);
AncestorLaw ancestor_from_json(const nlohmann::json& j);

}  // namespace bpre
