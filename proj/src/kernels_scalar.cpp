// SPDX-License-Identifier: Apache-2.0
#include "kernels_impl.hpp"

namespace bmpaw::kernels {

void attacker_objective_row_scalar(const ObjectiveSpec& spec, double r1,
                                   std::span<const double> r2, std::span<double> out)
{
    impl::objective_row<double, impl::ScalarOps>(spec, r1, r2, out);
}

void extra_rewards_grid_scalar(const ExtraSpec& spec, std::span<const double> eps1,
                               std::span<const double> eps2, std::span<double> attacker_extra,
                               std::span<double> target_extra)
{
    impl::extra_grid<double, impl::ScalarOps>(spec, eps1, eps2, attacker_extra, target_extra);
}

}  // namespace bmpaw::kernels
