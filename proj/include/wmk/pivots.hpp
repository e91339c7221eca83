#pragma once

// Pivotal statistics Y(w_t, xi_t) and their CDFs under null and alternative.
// A pivot's null distribution does not depend on the NTP distribution that
// generated the token, which is what makes Type I control possible.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "wmk/ntp.hpp"
#include "wmk/prng.hpp"

namespace wmk {

enum class PivotFamily { Gum, Dif, Baby };

struct PivotValue {
    double y;
    PivotFamily family;
};

struct PivotSeries {
    std::vector<double> values;
    PivotFamily family;
};

// Y^gum = U_{w}: the uniform coordinate of the selected token.
inline PivotValue pivot_gumbel(TokenId token, const GumbelUniforms& xi) {
    if (token < 1 || token > xi.u.size()) throw std::invalid_argument("pivot_gumbel: token out of range");
    return {xi.u[token - 1], PivotFamily::Gum};
}

inline double dif_eta(std::uint32_t i, std::size_t vocab_size) {
    return double(i - 1) / double(vocab_size - 1);
}

// Y^dif = |U - eta(pi(w))| with eta(i) = (i-1)/(|W|-1).
inline PivotValue pivot_dif(TokenId token, const InverseTransformXi& xi) {
    const std::size_t n = xi.pi.size();
    if (n < 2) throw std::invalid_argument("pivot_dif: vocabulary too small");
    return {std::abs(xi.u - dif_eta(xi.pi.position_of(token), n)), PivotFamily::Dif};
}

// Y^baby = (2w-1)(2U-1).
inline PivotValue pivot_baby(TokenId token, const BabyUniform& xi) {
    if (token > 1) throw std::invalid_argument("pivot_baby: token must be 0 or 1");
    return {(2.0 * double(token) - 1.0) * (2.0 * xi.u - 1.0), PivotFamily::Baby};
}

// ---------------------------------------------------------------------------
// CDFs
// ---------------------------------------------------------------------------

// Alternative CDF of Y^gum given P: sum_w P_w r^{1/P_w}. Zero-probability
// coordinates contribute nothing.
inline double cdf_gum_alt(const NtpDistribution& p, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("cdf_gum_alt: r out of [0,1]");
    if (r == 0.0) return 0.0;
    double sum = 0.0, c = 0.0;
    const double logr = std::log(r);
    for (double pw : p.probs()) {
        if (pw == 0.0) continue;
        const double term = pw * std::exp(logr / pw);
        const double y = term - c, t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return std::min(sum, 1.0);
}

// Alternative density of Y^gum given P: sum over supported w of r^{1/P_w - 1}.
inline double pdf_gum_alt(const NtpDistribution& p, double r) {
    if (r <= 0.0) r = 0x1.0p-600; // exponents are >= 0, limit handled below
    const double logr = std::log(r);
    double sum = 0.0;
    for (double pw : p.probs()) {
        if (pw == 0.0) continue;
        sum += std::exp((1.0 / pw - 1.0) * logr);
    }
    return sum;
}

// log of pdf_gum_alt, computed by log-sum-exp so it stays finite for r near
// 0 even when the plain density underflows to zero.
inline double log_pdf_gum_alt(const NtpDistribution& p, double r) {
    const double logr = std::log(clamp_unit(r));
    double emin = std::numeric_limits<double>::infinity();
    for (double pw : p.probs())
        if (pw > 0.0) emin = std::min(emin, 1.0 / pw - 1.0);
    double sum = 0.0;
    for (double pw : p.probs()) {
        if (pw == 0.0) continue;
        sum += std::exp((1.0 / pw - 1.0 - emin) * logr);
    }
    return emin * logr + std::log(sum);
}

// Exact null CDF of Y^dif at finite vocabulary (average over the uniform
// position of the token).
inline double cdf_dif_null_exact(std::size_t vocab_size, double r) {
    if (vocab_size < 2) throw std::invalid_argument("cdf_dif_null_exact: vocab_size must be >= 2");
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("cdf_dif_null_exact: r out of [0,1]");
    double sum = 0.0, c = 0.0;
    for (std::uint32_t i = 1; i <= vocab_size; ++i) {
        const double eta = dif_eta(i, vocab_size);
        const double term = std::min(eta + r, 1.0) - std::max(eta - r, 0.0);
        const double y = term - c, t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum / double(vocab_size);
}

// Exact alternative CDF of Y^dif by enumerating all |W|! permutations;
// an oracle path, not a production path.
inline double cdf_dif_alt_exact(const NtpDistribution& p, double r) {
    const std::size_t n = p.vocab_size();
    if (n > 8) throw std::invalid_argument("cdf_dif_alt_exact: enumeration too large (|W| > 8)");
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("cdf_dif_alt_exact: r out of [0,1]");
    // order[i-1] = token placed at position i
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 1u);
    double total = 0.0;
    std::size_t count = 0;
    do {
        double a_prev = 0.0;
        for (std::uint32_t i = 1; i <= n; ++i) {
            const double a = a_prev + p[order[i - 1]];
            const double eta = dif_eta(i, n);
            const double lo = std::max(a_prev, std::max(eta - r, 0.0));
            const double hi = std::min(a, std::min(eta + r, 1.0));
            if (hi > lo) total += hi - lo;
            a_prev = a;
        }
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    return total / double(count);
}

enum class Hypothesis { H0, H1 };

// Large-vocabulary limits: 1-(1-r)^2 under H0 and 1-(1-r/(1-Delta))^2 under
// H1 (point mass boundary at r = 1-Delta).
inline double cdf_dif_asymptotic(double delta, double r, Hypothesis hyp) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("cdf_dif_asymptotic: r out of [0,1]");
    const double scale = hyp == Hypothesis::H0 ? 1.0 : 1.0 - delta;
    const double tail = std::max(1.0 - r / scale, 0.0);
    return 1.0 - tail * tail;
}

// Asymptotic density f_dif,Delta(r) = 2/(1-Delta) * max{1 - r/(1-Delta), 0}.
inline double pdf_dif_asymptotic(double delta, double r) {
    const double scale = 1.0 - delta;
    return 2.0 / scale * std::max(1.0 - r / scale, 0.0);
}

} // namespace wmk
