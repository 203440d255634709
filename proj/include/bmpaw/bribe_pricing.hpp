// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "bmpaw/core_model.hpp"

namespace bmpaw::pricing {

/// Both incentive constraints are linear in (eps1, eps2) with the same
/// left-hand coefficients a1 = delta*c52 and a2 = eta*c54. The attacker
/// tolerates bribes with a1*eps1 + a2*eps2 below `ceiling`; the target
/// demands values above `floor`. `feasible` is floor < ceiling;
/// `reachable` additionally requires the open slab to intersect [0,1]^2,
/// which is what sampling and the boundary selections need.
struct BribeRegion {
    double a1 = 0.0;
    double a2 = 0.0;
    double ceiling = 0.0;
    double floor = 0.0;
    bool feasible = false;
    bool reachable = false;
    std::vector<std::pair<double, double>> sample_points;
};

/// Largest bribe level the attacker still profits from. Independent of
/// the eps fields of `params`.
double attacker_ceiling(const PowerProfile& profile, const AttackParams& params);

/// Smallest bribe level that makes cooperation pay for the target.
/// Requires an effective infiltration fraction above zero.
double target_floor(const PowerProfile& profile, const AttackParams& params);

/// Full region description with `n_samples` points strictly inside the
/// slab when it is reachable. Infeasibility is a result, not an error.
BribeRegion feasible_bribe_region(const PowerProfile& profile, const AttackParams& params,
                                  int n_samples);

/// Boundary selections on the floor/ceiling lines. Preference is the
/// symmetric point eps1 = eps2; when that leaves the unit box, one
/// coordinate is clamped to its bound. Errors if the region is empty or
/// the line does not cross the box.
std::pair<double, double> minimum_eps(const PowerProfile& profile, const AttackParams& params);
std::pair<double, double> maximum_eps(const PowerProfile& profile, const AttackParams& params);

}  // namespace bmpaw::pricing
