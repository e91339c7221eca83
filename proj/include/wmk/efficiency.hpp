#pragma once

// Class-dependent efficiency rates R_P(h) = -inf_{theta>=0} [theta*E0 h +
// log phi_{P,h}(theta)], minimax-optimal quantities, and comparison curves.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "wmk/ntp.hpp"
#include "wmk/quadrature.hpp"
#include "wmk/scores.hpp"

namespace wmk {

struct EfficiencyReport {
    double rate;        // R >= 0, +inf flagged via infinity
    double theta_star;  // minimizing theta
    NtpDistribution least_favorable;
    ScoreSpec score;
};

namespace detail {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Golden-section refinement after bracketing by doubling; the objective is
// convex in theta (standing large-deviation assumption).
template <class F>
std::pair<double, double> minimize_convex(F&& f, double theta_cap, double tol = 1e-8) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0;
    double step = std::min(1.0, theta_cap);
    double prev_theta = 0.0, prev_val = f(0.0);
    double hi = theta_cap;
    for (;;) {
        double theta = std::min(lo + step, theta_cap);
        double val = f(theta);
        if (!(val < prev_val) || theta >= theta_cap) {
            hi = theta;
            break;
        }
        lo = prev_theta;
        prev_theta = theta;
        prev_val = val;
        step *= 2.0;
    }
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    const double theta = 0.5 * (a + b);
    return {theta, f(theta)};
}

} // namespace detail

// MGF phi_{P,h}(theta) = E_{1,P} exp(-theta h(Y)) for gum-family scores.
// Closed forms where the catalogue has them, quadrature against the
// alternative pivot density otherwise.
inline double mgf(const ScoreSpec& spec, const NtpDistribution& p, double theta) {
    if (theta < 0.0) throw std::domain_error("mgf: theta must be >= 0");
    switch (spec.kind) {
    case ScoreKind::Ars: { // sum_w B(1/P_w, theta+1)
        double sum = 0.0;
        for (double pw : p.probs()) {
            if (pw == 0.0) continue;
            sum += std::exp(detail::log_beta(1.0 / pw, theta + 1.0));
        }
        return sum;
    }
    case ScoreKind::Log: { // sum_w P_w / (1 - P_w theta), theta < 1/P_(1)
        if (theta * p.top1() >= 1.0) throw std::domain_error("mgf: theta outside [0, 1/P_(1))");
        double sum = 0.0;
        for (double pw : p.probs()) {
            if (pw == 0.0) continue;
            sum += pw / (1.0 - pw * theta);
        }
        return sum;
    }
    case ScoreKind::Ind: { // F(delta) + e^{-theta} (1 - F(delta))
        const double F = cdf_gum_alt(p, spec.delta);
        return F + std::exp(-theta) * (1.0 - F);
    }
    case ScoreKind::GumOpt:
    case ScoreKind::Llr: {
        // combined in log space: the score is itself a log density, and
        // exp(-theta*h) alone can overflow near r = 0
        auto integrand = [&](double r) {
            return std::exp(log_pdf_gum_alt(p, r) - theta * score_eval(spec, r));
        };
        return integrate(integrand, 0.0, 1.0);
    }
    case ScoreKind::BabyId: { // closed form from the two-token mixture law
        if (p.vocab_size() != 2) throw std::invalid_argument("mgf: baby_id needs |W| = 2");
        const double pmin = std::min(p[1], p[2]);
        if (theta == 0.0) return 1.0;
        const double a = 1.0 - 2.0 * pmin;
        return ((std::cosh(theta * a) - 1.0) - std::expm1(-theta)) / theta;
    }
    default:
        throw std::invalid_argument("mgf: no alternative law for dif-family scores; "
                                    "use dif_rate_lower_bound");
    }
}

// R_P(h) by 1-D minimization of f(theta) = theta*E0 h + log phi(theta).
inline EfficiencyReport rate(const ScoreSpec& spec, const NtpDistribution& p) {
    const NullMoments nm = null_moments(spec, p.vocab_size());
    if (!nm.mean_finite) throw std::domain_error("rate: null mean not finite");
    double cap = std::numeric_limits<double>::max();
    if (spec.kind == ScoreKind::Log) cap = 1.0 / p.top1() - 1e-10;
    auto objective = [&](double theta) {
        try {
            const double phi = mgf(spec, p, theta);
            if (!(phi > 0.0) || !std::isfinite(phi))
                return std::numeric_limits<double>::infinity();
            return theta * nm.mean + std::log(phi);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    auto [theta, fmin] = detail::minimize_convex(objective, cap);
    return {std::max(0.0, -fmin), theta, p, spec};
}

// Worst case over the Delta-regular class reduces to the vertex P*_Delta for
// nondecreasing scores.
inline EfficiencyReport class_rate(const ScoreSpec& spec, RegularityLevel delta) {
    if (!spec.nondecreasing())
        throw std::invalid_argument("class_rate: score must be nondecreasing in the pivot");
    const std::size_t k = std::size_t(std::floor(1.0 / (1.0 - delta.delta)));
    return rate(spec, least_favorable(delta, k + 2));
}

// Bisection root of Delta -> R_Delta(A) - R_Delta(B).
inline double crossover_delta(const ScoreSpec& a, const ScoreSpec& b, double lo, double hi,
                              double tol = 1e-6) {
    auto diff = [&](double d) {
        return class_rate(a, d).rate - class_rate(b, d).rate;
    };
    double flo = diff(lo), fhi = diff(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("crossover_delta: no sign change on bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = diff(mid);
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// gamma-mixture bound exponent: gamma*R_{Delta1} + (1-gamma)*R_{Delta2},
// with Delta2 = 0 meaning the full simplex (zero rate).
inline double mixture_rate(const ScoreSpec& spec, RegularityLevel delta1, RegularityLevel delta2,
                           double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("mixture_rate: gamma out of [0,1]");
    if (delta1.delta < delta2.delta)
        throw std::invalid_argument("mixture_rate: need delta1 >= delta2 (P_Delta1 inside P_Delta2)");
    double r1 = gamma > 0.0 ? class_rate(spec, delta1).rate : 0.0;
    double r2 = (1.0 - gamma) > 0.0 && delta2.delta > 0.0 ? class_rate(spec, delta2).rate : 0.0;
    return gamma * r1 + (1.0 - gamma) * r2;
}

// Efficiency rate of the baby watermark with the identity score over the
// class {P : Delta <= min(P_0, P_1) <= 1/2}.
inline double baby_rate(double delta) {
    if (!(delta > 0.0 && delta <= 0.5)) throw std::invalid_argument("baby_rate: delta out of (0, 0.5]");
    const double a = 1.0 - 2.0 * delta;
    auto objective = [&](double theta) {
        if (theta == 0.0) return 0.0;
        const double num = (std::cosh(theta * a) - 1.0) - std::expm1(-theta);
        if (!(num > 0.0)) return std::numeric_limits<double>::infinity();
        return std::log(num / theta);
    };
    auto [theta, fmin] = detail::minimize_convex(objective, std::numeric_limits<double>::max());
    (void)theta;
    return std::max(0.0, -fmin);
}

// D_KL(mu_0 || mu_{1,P}) = -int_0^1 log(sum_{supp} r^{1/P_w - 1}) dr.
inline double kl_null_to_alt(const NtpDistribution& p) {
    auto integrand = [&](double r) { return log_pdf_gum_alt(p, r); };
    return -integrate(integrand, 0.0, 1.0, 1e-9);
}

// Lower bound on the asymptotic dif rate of a truncated score: evaluate
// -[ int h dF_dif,0 + log int e^{-h} dF_dif,Delta ].
inline double dif_rate_lower_bound(const ScoreSpec& spec, double delta) {
    if (spec.kind != ScoreKind::DifOpt || !std::isfinite(spec.truncation))
        throw std::invalid_argument("dif_rate_lower_bound: needs a truncated dif_opt score");
    auto h = [&](double r) { return score_eval(spec, r); };
    const auto breaks = detail::dif_opt_breakpoints(spec.delta, spec.truncation);
    const double first = detail::integrate_piecewise(
        [&](double r) { return h(r) * pdf_dif_asymptotic(0.0, r); }, 0.0, 1.0, breaks);
    const double second = detail::integrate_piecewise(
        [&](double r) { return std::exp(-h(r)) * pdf_dif_asymptotic(delta, r); }, 0.0,
        1.0 - delta, breaks);
    return -(first + std::log(second));
}

// argmax of -delta log delta on (0,1); analytically 1/e.
inline double ind_delta_optimum() {
    auto neg = [](double d) { return d * std::log(d); }; // minimize the negation
    auto [delta, val] = detail::minimize_convex(
        [&](double t) { return t >= 1.0 ? 0.0 : neg(std::max(t, 1e-300)); }, 1.0 - 1e-12);
    (void)val;
    return delta;
}

} // namespace wmk
