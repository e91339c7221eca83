#pragma once

// Score functions h applied to pivots before summing into the detection
// statistic, together with their null moments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wmk/ntp.hpp"
#include "wmk/pivots.hpp"
#include "wmk/quadrature.hpp"

namespace wmk {

enum class ScoreKind { Ars, Log, Ind, GumOpt, DifOpt, DifNeg, BabyId, Llr };

struct ScoreSpec {
    ScoreKind kind;
    double delta = 0.0;      // threshold for Ind; class level for GumOpt/DifOpt/Llr
    double truncation = 10.0; // M for DifOpt
    std::optional<NtpDistribution> reference; // explicit P for Llr

    static ScoreSpec ars() { return {ScoreKind::Ars}; }
    static ScoreSpec log_score() { return {ScoreKind::Log}; }
    static ScoreSpec ind(double delta) {
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ind: delta out of (0,1)");
        return {ScoreKind::Ind, delta};
    }
    static ScoreSpec gum_opt(double delta) {
        if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("gum_opt: delta out of [0,1)");
        return {ScoreKind::GumOpt, delta};
    }
    static ScoreSpec dif_opt(double delta, double truncation = 10.0) {
        if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("dif_opt: delta out of [0,1)");
        if (!(truncation > 0.0)) throw std::invalid_argument("dif_opt: truncation must be > 0");
        return {ScoreKind::DifOpt, delta, truncation};
    }
    static ScoreSpec dif_neg() { return {ScoreKind::DifNeg}; }
    static ScoreSpec baby_id() { return {ScoreKind::BabyId}; }
    static ScoreSpec llr(NtpDistribution reference) {
        ScoreSpec s{ScoreKind::Llr};
        s.reference = std::move(reference);
        return s;
    }
    // Log-likelihood ratio against the least-favorable vertex of the class.
    static ScoreSpec llr_least_favorable(double delta) {
        const std::size_t k = std::size_t(std::floor(1.0 / (1.0 - delta)));
        ScoreSpec s = llr(least_favorable(delta, std::max<std::size_t>(k + 1, 2)));
        s.delta = delta;
        return s;
    }

    PivotFamily family() const {
        switch (kind) {
        case ScoreKind::DifOpt:
        case ScoreKind::DifNeg: return PivotFamily::Dif;
        case ScoreKind::BabyId: return PivotFamily::Baby;
        default: return PivotFamily::Gum;
        }
    }

    // Nondecreasing in the pivot on its domain; the hypothesis of the
    // worst-case-at-vertex reduction.
    bool nondecreasing() const {
        switch (kind) {
        case ScoreKind::DifOpt:
        case ScoreKind::DifNeg: return false;
        default: return true;
        }
    }

    std::string name() const;
};

namespace detail {

inline double gum_opt_eval(double delta, double r) {
    r = clamp_unit(r);
    if (delta == 0.0) return 0.0; // singular vertex, flat likelihood ratio
    const double peak = 1.0 - delta;
    const double k = std::floor(1.0 / peak);
    const double q = 1.0 - peak * k; // residual vertex mass
    double val = k * std::pow(r, delta / peak);
    if (q > kSimplexTol) val += std::pow(r, (1.0 - q) / q);
    return std::log(val);
}

inline double dif_opt_eval(double delta, double truncation, double r) {
    const double num = pdf_dif_asymptotic(delta, r);
    if (num <= 0.0) return -truncation;
    const double den = pdf_dif_asymptotic(0.0, r);
    if (den <= 0.0) return truncation; // r = 1 with delta = 0 only
    const double h = std::log(num / den);
    return std::clamp(h, -truncation, truncation);
}

inline double llr_eval(const NtpDistribution& p, double r) {
    return log_pdf_gum_alt(p, clamp_unit(r));
}

// Kinks of the truncated dif_opt score on (0,1): the clamp boundaries where
// the raw log ratio crosses +/-M, and the support end 1-delta. Quadrature
// over [0,1] must split here or it loses several digits.
inline std::vector<double> dif_opt_breakpoints(double delta, double truncation) {
    const double s = 1.0 - delta;
    auto hraw = [&](double r) {
        return std::log(pdf_dif_asymptotic(delta, r) / pdf_dif_asymptotic(0.0, r));
    };
    auto bisect = [&](double target, double lo, double hi) {
        // hraw is monotone decreasing on (0, s)
        for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
            const double mid = 0.5 * (lo + hi);
            (hraw(mid) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double eps = 1e-15;
    std::vector<double> points;
    if (delta > 0.0 && hraw(eps) > truncation)
        points.push_back(bisect(truncation, eps, s - eps));
    points.push_back(bisect(-truncation, eps, s - eps)); // hraw -> -inf at s
    if (s < 1.0) points.push_back(s);
    return points;
}

// Piecewise integral of g over [a, b] split at the interior breakpoints.
template <class F>
double integrate_piecewise(F&& g, double a, double b, const std::vector<double>& breaks) {
    double total = 0.0, lo = a;
    for (double x : breaks) {
        if (x <= lo || x >= b) continue;
        total += integrate(g, lo, x);
        lo = x;
    }
    total += integrate(g, lo, b);
    return total;
}

} // namespace detail

inline double score_eval(const ScoreSpec& spec, double r) {
    switch (spec.kind) {
    case ScoreKind::Ars: return -std::log(1.0 - clamp_unit(r));
    case ScoreKind::Log: return std::log(clamp_unit(r));
    case ScoreKind::Ind: return r >= spec.delta ? 1.0 : 0.0;
    case ScoreKind::GumOpt: return detail::gum_opt_eval(spec.delta, r);
    case ScoreKind::DifOpt: return detail::dif_opt_eval(spec.delta, spec.truncation, r);
    case ScoreKind::DifNeg: return -r;
    case ScoreKind::BabyId: return r;
    case ScoreKind::Llr: return detail::llr_eval(*spec.reference, r);
    }
    throw std::logic_error("score_eval: unknown kind");
}

inline double score_eval(const ScoreSpec& spec, const PivotValue& y) {
    if (y.family != spec.family())
        throw std::invalid_argument("score_eval: pivot family does not match score");
    return score_eval(spec, y.y);
}

struct NullMoments {
    double mean;
    double variance;
    bool mean_finite = true;

    NullMoments(double m, double v, bool finite = true)
        : mean(m), variance(v), mean_finite(finite) {}
};

// Null moments of h(Y). The gum family's null pivot is uniform; the dif
// family's null law needs the active vocabulary size (the asymptotic density
// 2(1-r) is used for dif_opt, whose score is itself asymptotic).
inline NullMoments null_moments(const ScoreSpec& spec, std::size_t vocab_size = 0) {
    switch (spec.kind) {
    case ScoreKind::Ars: return {1.0, 1.0}; // unit exponential
    case ScoreKind::Log: return {-1.0, 1.0};
    case ScoreKind::Ind: return {1.0 - spec.delta, spec.delta * (1.0 - spec.delta)};
    case ScoreKind::BabyId: return {0.0, 1.0 / 3.0};
    case ScoreKind::GumOpt:
    case ScoreKind::Llr: {
        auto h = [&](double r) { return score_eval(spec, r); };
        const double m = integrate([&](double r) { return h(r); }, 0.0, 1.0);
        const double m2 = integrate([&](double r) { double v = h(r); return v * v; }, 0.0, 1.0);
        return {m, std::max(m2 - m * m, 0.0)};
    }
    case ScoreKind::DifOpt: {
        if (!std::isfinite(spec.truncation))
            return {-std::numeric_limits<double>::infinity(), 0.0, false};
        auto h = [&](double r) { return score_eval(spec, r); };
        auto f0 = [](double r) { return pdf_dif_asymptotic(0.0, r); };
        const auto breaks = detail::dif_opt_breakpoints(spec.delta, spec.truncation);
        const double m =
            detail::integrate_piecewise([&](double r) { return h(r) * f0(r); }, 0.0, 1.0, breaks);
        const double m2 = detail::integrate_piecewise(
            [&](double r) { double v = h(r); return v * v * f0(r); }, 0.0, 1.0, breaks);
        return {m, std::max(m2 - m * m, 0.0)};
    }
    case ScoreKind::DifNeg: {
        if (vocab_size < 2)
            throw std::invalid_argument("null_moments: dif_neg needs the active vocab size");
        auto tail = [&](double r) { return 1.0 - cdf_dif_null_exact(vocab_size, r); };
        const double ey = integrate(tail, 0.0, 1.0);
        const double ey2 = integrate([&](double r) { return 2.0 * r * tail(r); }, 0.0, 1.0);
        return {-ey, std::max(ey2 - ey * ey, 0.0)};
    }
    }
    throw std::logic_error("null_moments: unknown kind");
}

// ---------------------------------------------------------------------------
// Text round-trip, e.g. "gum_opt(delta=0.5)", "ind(delta=0.367879)",
// "dif_opt(delta=0.2,m=10)", "llr(delta=0.5)".
// ---------------------------------------------------------------------------

inline std::string ScoreSpec::name() const {
    std::ostringstream os;
    os.precision(12);
    switch (kind) {
    case ScoreKind::Ars: return "ars";
    case ScoreKind::Log: return "log";
    case ScoreKind::Ind: os << "ind(delta=" << delta << ")"; return os.str();
    case ScoreKind::GumOpt: os << "gum_opt(delta=" << delta << ")"; return os.str();
    case ScoreKind::DifOpt:
        os << "dif_opt(delta=" << delta << ",m=" << truncation << ")";
        return os.str();
    case ScoreKind::DifNeg: return "dif_neg";
    case ScoreKind::BabyId: return "baby_id";
    case ScoreKind::Llr: os << "llr(delta=" << delta << ")"; return os.str();
    }
    return "?";
}

inline ScoreSpec parse_score(const std::string& text) {
    auto paren = text.find('(');
    const std::string head = text.substr(0, paren);
    std::map<std::string, double> params;
    if (paren != std::string::npos) {
        if (text.back() != ')') throw std::invalid_argument("parse_score: missing ')'");
        std::string inner = text.substr(paren + 1, text.size() - paren - 2);
        std::istringstream is(inner);
        std::string item;
        while (std::getline(is, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("parse_score: expected k=v");
            params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        }
    }
    auto get = [&](const std::string& k, std::optional<double> def = {}) {
        auto it = params.find(k);
        if (it != params.end()) return it->second;
        if (def) return *def;
        throw std::invalid_argument("parse_score: missing parameter '" + k + "' for " + head);
    };
    if (head == "ars") return ScoreSpec::ars();
    if (head == "log") return ScoreSpec::log_score();
    if (head == "ind") return ScoreSpec::ind(get("delta"));
    if (head == "gum_opt") return ScoreSpec::gum_opt(get("delta"));
    if (head == "dif_opt") return ScoreSpec::dif_opt(get("delta"), get("m", 10.0));
    if (head == "dif_neg") return ScoreSpec::dif_neg();
    if (head == "baby_id") return ScoreSpec::baby_id();
    if (head == "llr") return ScoreSpec::llr_least_favorable(get("delta"));
    throw std::invalid_argument("parse_score: unknown score '" + head + "'");
}

} // namespace wmk
