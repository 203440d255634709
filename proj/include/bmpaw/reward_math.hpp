// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bmpaw/core_model.hpp"
#include "bmpaw/dual.hpp"

namespace bmpaw::detail {

// Shared closed-form expressions, templated on the scalar type so the same
// code serves the double reference path, the Dual2 gradient path, and the
// wide vector path. Division by an empty pool (num = den = 0) yields 0;
// Arith is the per-type hook for that (the vector TU adds its own
// specialization).

template <class T>
struct Arith;

template <>
struct Arith<double> {
    static double safe_div(double num, double den) { return den != 0.0 ? num / den : 0.0; }
};

template <>
struct Arith<Dual2> {
    static Dual2 safe_div(Dual2 num, Dual2 den)
    {
        return den.v != 0.0 ? num / den : Dual2{};
    }
};

template <class T>
T safe_div(T num, T den)
{
    return Arith<T>::safe_div(num, den);
}

template <class T>
struct WinProbsT {
    T c52, c54, c52d, c54d;
};

template <class T>
WinProbsT<T> win_probs(const PowerProfile& p, double gamma, T r2)
{
    const T denom = T(1.0) - r2 * p.alpha;
    const T innocent = (T(1.0) - r2) * p.alpha;
    WinProbsT<T> w{};
    w.c52 = (innocent + (p.eta + p.beta + gamma * p.delta)) / denom;
    w.c54 = T(1.0);
    w.c52d = (innocent + (p.beta + gamma * (p.delta + p.eta))) / denom;
    w.c54d = (innocent + (p.beta + gamma * p.delta)) / denom;
    return w;
}

template <class T>
T rbar_value(RbarPolicy policy, T r1, T r2, double empirical)
{
    switch (policy) {
        case RbarPolicy::Mean: return (r1 + r2) * 0.5;
        case RbarPolicy::R1Only: return r1;
        case RbarPolicy::R2Only: return r2;
        case RbarPolicy::Empirical: return T(empirical);
    }
    return (r1 + r2) * 0.5;
}

template <class T>
struct AttackerTermsT {
    T imr, sr, fr, fr_denied, bm;
    T total_bmpaw, total_paw;
    T extra_direct;  // difference of the two totals
    T extra_closed;  // published closed form
};

template <class T>
AttackerTermsT<T> attacker_terms(const PowerProfile& p, T r1, T r2, double gamma, T eps1,
                                 T eps2, T rbar)
{
    const double a = p.alpha, b = p.beta, e = p.eta, d = p.delta;
    const T denom = T(1.0) - r2 * a;
    const auto c = win_probs(p, gamma, r2);

    const T infil1 = r1 * a;
    const T share_pre = safe_div(infil1, infil1 + T(b));
    const T share_bar = safe_div(rbar * a, rbar * a + T(b));

    AttackerTermsT<T> t{};
    t.imr = (T(1.0) - r1) * a + infil1 * ((T(1.0) - r2) * a) / denom;
    t.sr = b * share_pre + infil1 * (T(b) / denom) * share_bar;

    const T w52 = infil1 * (T(d) / denom);
    const T w54 = infil1 * (T(e) / denom);
    t.fr = (c.c52 * w52 + c.c54 * w54) * share_bar;
    t.bm = (eps1 * c.c52 * w52 + eps2 * c.c54 * w54) * share_bar;
    t.fr_denied = (c.c52d * w52 + c.c54d * w54) * share_bar;

    t.total_bmpaw = t.imr + t.sr + t.fr - t.bm;
    t.total_paw = t.imr + t.sr + t.fr_denied;
    t.extra_direct = t.total_bmpaw - t.total_paw;
    t.extra_closed = (((T(1.0) - eps1) * c.c52 - c.c52d) * w52 +
                      ((T(1.0) - eps2) * c.c54 - c.c54d) * w54) *
                     share_bar;
    return t;
}

template <class T>
struct TargetTermsT {
    T bmpaw, paw;
    T extra_closed;
    T resolution_credit;  // follow-up block credit common to both totals
};

template <class T>
TargetTermsT<T> target_terms(const PowerProfile& p, T r1, T r2, double gamma, T eps1, T eps2,
                             T rbar)
{
    const double a = p.alpha, b = p.beta, e = p.eta, d = p.delta;
    const T denom = T(1.0) - r2 * a;
    const auto c = win_probs(p, gamma, r2);

    const T infil1 = r1 * a;
    const T share_bar = safe_div(rbar * a, rbar * a + T(b));
    const T bribe_recv =
        infil1 * (eps1 * c.c52 * (T(d) / denom) + eps2 * c.c54 * (T(e) / denom)) * share_bar;

    TargetTermsT<T> t{};
    t.bmpaw = e + infil1 * (T(d) / denom + T(e) / denom) * (T(e) / denom) + bribe_recv;
    t.paw = e + infil1 * (T(d) / denom) * (T(e) / denom) +
            infil1 * (T(e) / denom) * (T(1.0) - c.c54d + T(e) / denom);
    t.extra_closed = bribe_recv - infil1 * (T(e) / denom) * (T(1.0) - c.c54d);
    t.resolution_credit = infil1 * ((T(d) + T(e)) / denom) * (T(e) / denom);
    return t;
}

/// Infiltration-program objective: the withholding-with-bribes total, either
/// net of bribes paid or with bribes excluded.
template <class T>
T attacker_objective(const PowerProfile& p, double gamma, double eps1, double eps2,
                     RbarPolicy policy, double rbar_empirical, bool exclude_bribes, T r1, T r2)
{
    const T rbar = rbar_value(policy, r1, r2, rbar_empirical);
    const auto t = attacker_terms(p, r1, r2, gamma, T(eps1), T(eps2), rbar);
    return exclude_bribes ? t.imr + t.sr + t.fr : t.total_bmpaw;
}

}  // namespace bmpaw::detail
