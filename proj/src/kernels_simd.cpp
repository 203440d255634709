// SPDX-License-Identifier: Apache-2.0
// Wide variant of the batched evaluators. On x86-64 this TU is built with
// -mavx2 (four doubles per lane group); the dispatcher only routes here when
// the CPU agrees. Contraction is off so values match the scalar backend
// exactly.
#include <experimental/simd>

#include "kernels_impl.hpp"

namespace stdx = std::experimental;

namespace bmpaw::detail {

using pack_t = stdx::native_simd<double>;

template <>
struct Arith<pack_t> {
    static pack_t safe_div(pack_t num, pack_t den)
    {
        pack_t out(0.0);
        const auto ok = den != pack_t(0.0);
        where(ok, out) = num / den;
        return out;
    }
};

}  // namespace bmpaw::detail

namespace bmpaw::kernels {

namespace {

struct SimdOps {
    static constexpr std::size_t width = detail::pack_t::size();
    static detail::pack_t load(const double* p)
    {
        detail::pack_t v;
        v.copy_from(p, stdx::element_aligned);
        return v;
    }
    static void store(detail::pack_t v, double* p) { v.copy_to(p, stdx::element_aligned); }
};

}  // namespace

void attacker_objective_row_simd(const ObjectiveSpec& spec, double r1,
                                 std::span<const double> r2, std::span<double> out)
{
    impl::objective_row<detail::pack_t, SimdOps>(spec, r1, r2, out);
}

void extra_rewards_grid_simd(const ExtraSpec& spec, std::span<const double> eps1,
                             std::span<const double> eps2, std::span<double> attacker_extra,
                             std::span<double> target_extra)
{
    impl::extra_grid<detail::pack_t, SimdOps>(spec, eps1, eps2, attacker_extra, target_extra);
}

}  // namespace bmpaw::kernels
