// SPDX-License-Identifier: Apache-2.0
#include "bmpaw/kernels.hpp"

#include <stdexcept>

namespace bmpaw::kernels {

void attacker_objective_row_scalar(const ObjectiveSpec&, double, std::span<const double>,
                                   std::span<double>);
void extra_rewards_grid_scalar(const ExtraSpec&, std::span<const double>,
                               std::span<const double>, std::span<double>, std::span<double>);
#if defined(BMPAW_HAVE_SIMD)
void attacker_objective_row_simd(const ObjectiveSpec&, double, std::span<const double>,
                                 std::span<double>);
void extra_rewards_grid_simd(const ExtraSpec&, std::span<const double>, std::span<const double>,
                             std::span<double>, std::span<double>);
#endif

bool simd_available()
{
#if !defined(BMPAW_HAVE_SIMD)
    return false;
#elif defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return true;
#endif
}

Backend resolve_backend(Backend requested)
{
    switch (requested) {
        case Backend::Auto: return simd_available() ? Backend::Simd : Backend::Scalar;
        case Backend::Scalar: return Backend::Scalar;
        case Backend::Simd:
            if (!simd_available()) {
                throw std::runtime_error("simd kernel backend requested but not available");
            }
            return Backend::Simd;
    }
    return Backend::Scalar;
}

std::string_view backend_name(Backend backend)
{
    switch (backend) {
        case Backend::Auto: return "auto";
        case Backend::Scalar: return "scalar";
        case Backend::Simd: return "simd";
    }
    return "scalar";
}

void attacker_objective_row(const ObjectiveSpec& spec, double r1, std::span<const double> r2,
                            std::span<double> out, Backend backend)
{
    if (out.size() < r2.size()) throw std::invalid_argument("output span too small");
    const Backend chosen = resolve_backend(backend);
#if defined(BMPAW_HAVE_SIMD)
    if (chosen == Backend::Simd) {
        attacker_objective_row_simd(spec, r1, r2, out);
        return;
    }
#else
    (void)chosen;
#endif
    attacker_objective_row_scalar(spec, r1, r2, out);
}

void extra_rewards_grid(const ExtraSpec& spec, std::span<const double> eps1,
                        std::span<const double> eps2, std::span<double> attacker_extra,
                        std::span<double> target_extra, Backend backend)
{
    const std::size_t need = eps1.size() * eps2.size();
    if (attacker_extra.size() < need || target_extra.size() < need) {
        throw std::invalid_argument("output span too small");
    }
    const Backend chosen = resolve_backend(backend);
#if defined(BMPAW_HAVE_SIMD)
    if (chosen == Backend::Simd) {
        extra_rewards_grid_simd(spec, eps1, eps2, attacker_extra, target_extra);
        return;
    }
#else
    (void)chosen;
#endif
    extra_rewards_grid_scalar(spec, eps1, eps2, attacker_extra, target_extra);
}

}  // namespace bmpaw::kernels
