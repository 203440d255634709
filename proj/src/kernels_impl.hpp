// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "bmpaw/kernels.hpp"
#include "bmpaw/reward_math.hpp"

namespace bmpaw::kernels::impl {

// One body for every backend: Pack is the wide type, Ops bridges load/store.
// The scalar tail reuses the double instantiation, which keeps the values
// identical to the scalar backend element for element.

template <class Pack, class Ops>
void objective_row(const ObjectiveSpec& spec, double r1, std::span<const double> r2,
                   std::span<double> out)
{
    constexpr std::size_t width = Ops::width;
    const std::size_t n = r2.size();
    std::size_t i = 0;
    for (; i + width <= n; i += width) {
        const Pack r2v = Ops::load(r2.data() + i);
        const Pack val = detail::attacker_objective(spec.profile, spec.gamma, spec.eps1,
                                                    spec.eps2, spec.rbar_policy,
                                                    spec.rbar_empirical, spec.exclude_bribes,
                                                    Pack(r1), r2v);
        Ops::store(val, out.data() + i);
    }
    for (; i < n; ++i) {
        out[i] = detail::attacker_objective(spec.profile, spec.gamma, spec.eps1, spec.eps2,
                                            spec.rbar_policy, spec.rbar_empirical,
                                            spec.exclude_bribes, r1, r2[i]);
    }
}

template <class Pack, class Ops>
void extra_grid(const ExtraSpec& spec, std::span<const double> eps1,
                std::span<const double> eps2, std::span<double> attacker_extra,
                std::span<double> target_extra)
{
    constexpr std::size_t width = Ops::width;
    const double rbar =
        detail::rbar_value(spec.rbar_policy, spec.r1, spec.r2, spec.rbar_empirical);
    for (std::size_t i1 = 0; i1 < eps1.size(); ++i1) {
        const std::size_t row = i1 * eps2.size();
        std::size_t i = 0;
        for (; i + width <= eps2.size(); i += width) {
            const Pack e2 = Ops::load(eps2.data() + i);
            const auto at = detail::attacker_terms(spec.profile, Pack(spec.r1), Pack(spec.r2),
                                                   spec.gamma, Pack(eps1[i1]), e2, Pack(rbar));
            const auto tt = detail::target_terms(spec.profile, Pack(spec.r1), Pack(spec.r2),
                                                 spec.gamma, Pack(eps1[i1]), e2, Pack(rbar));
            Ops::store(at.extra_closed, attacker_extra.data() + row + i);
            Ops::store(tt.extra_closed, target_extra.data() + row + i);
        }
        for (; i < eps2.size(); ++i) {
            const auto at = detail::attacker_terms(spec.profile, spec.r1, spec.r2, spec.gamma,
                                                   eps1[i1], eps2[i], rbar);
            const auto tt = detail::target_terms(spec.profile, spec.r1, spec.r2, spec.gamma,
                                                 eps1[i1], eps2[i], rbar);
            attacker_extra[row + i] = at.extra_closed;
            target_extra[row + i] = tt.extra_closed;
        }
    }
}

struct ScalarOps {
    static constexpr std::size_t width = 1;
    static double load(const double* p) { return *p; }
    static void store(double v, double* p) { *p = v; }
};

}  // namespace bmpaw::kernels::impl
