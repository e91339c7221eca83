#pragma once

// Next-token-prediction distributions, synthetic families, distribution
// classes, and least-favorable vertices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace wmk {

inline constexpr double kSimplexTol = 1e-12;

class NtpDistribution {
public:
    explicit NtpDistribution(std::vector<double> probs) : p_(std::move(probs)) {
        if (p_.size() < 2) throw std::invalid_argument("NtpDistribution: need at least 2 tokens");
        double sum = 0.0, c = 0.0;
        for (double x : p_) {
            if (!(x >= 0.0)) throw std::invalid_argument("NtpDistribution: negative entry");
            double y = x - c, t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        if (std::abs(sum - 1.0) > kSimplexTol)
            throw std::invalid_argument("NtpDistribution: entries sum to " + std::to_string(sum));
    }

    std::size_t vocab_size() const { return p_.size(); }
    double operator[](std::size_t w) const { return p_[w - 1]; } // 1-based token id
    const std::vector<double>& probs() const { return p_; }

    double top1() const { return *std::max_element(p_.begin(), p_.end()); }

private:
    std::vector<double> p_;
};

struct RegularityLevel {
    double delta;

    RegularityLevel(double d) : delta(d) { // NOLINT(google-explicit-constructor)
        if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("RegularityLevel out of [0,1)");
    }
};

struct GeneralClassBounds {
    double delta1;
    double delta2;

    GeneralClassBounds(double d1, double d2) : delta1(d1), delta2(d2) {
        if (!(0.0 <= d2 && d2 < d1 && d1 < 1.0))
            throw std::invalid_argument("GeneralClassBounds: need 0 <= delta2 < delta1 < 1");
    }
};

// Spike: first coordinate 1-delta, the rest uniform over the remaining mass.
inline NtpDistribution make_spike(double delta, std::size_t vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("make_spike: vocab_size must be >= 2");
    if (!(delta >= 0.0 && delta <= 1.0 - 1.0 / double(vocab_size)))
        throw std::invalid_argument("make_spike: delta out of [0, 1-1/|W|]");
    std::vector<double> p(vocab_size, delta / double(vocab_size - 1));
    p[0] = 1.0 - delta;
    return NtpDistribution(std::move(p));
}

// probs[w] proportional to (w+b)^(-a), w = 1..|W|.
inline NtpDistribution make_power_law(double a, double b, std::size_t vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("make_power_law: vocab_size must be >= 2");
    if (!(a >= 0.0) || !(b > -1.0))
        throw std::invalid_argument("make_power_law: need a >= 0 and b > -1");
    std::vector<double> p(vocab_size);
    double sum = 0.0;
    for (std::size_t w = 1; w <= vocab_size; ++w) {
        p[w - 1] = std::pow(double(w) + b, -a);
        sum += p[w - 1];
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw std::invalid_argument("make_power_law: non-normalizable parameters");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < vocab_size; ++i) {
        p[i] /= sum;
        acc += p[i];
    }
    p[vocab_size - 1] = 1.0 - acc; // exact simplex closure
    return NtpDistribution(std::move(p));
}

// P*_Delta: 1-Delta repeated floor(1/(1-Delta)) times, then the residual
// mass, then zeros. The vertex of the Delta-regular class closest to a
// singular distribution.
inline NtpDistribution least_favorable(RegularityLevel delta, std::size_t vocab_size) {
    const double peak = 1.0 - delta.delta;
    const std::size_t k = std::size_t(std::floor(1.0 / peak));
    const double residual = 1.0 - peak * double(k);
    const std::size_t support = k + (residual > kSimplexTol ? 1 : 0);
    if (vocab_size < std::max<std::size_t>(support, 2))
        throw std::invalid_argument("least_favorable: vocab too small for support");
    std::vector<double> p(vocab_size, 0.0);
    for (std::size_t i = 0; i < k; ++i) p[i] = peak;
    if (residual > kSimplexTol) p[k] = residual;
    else p[k - 1] += residual; // absorb rounding dust
    return NtpDistribution(std::move(p));
}

// P*_{Delta1,Delta2}: 1-Delta1, then 1-Delta2 repeated floor(Delta1/(1-Delta2))
// times, then the residual, then zeros.
inline NtpDistribution least_favorable_general(GeneralClassBounds b, std::size_t vocab_size) {
    const double head = 1.0 - b.delta1;
    const double second = 1.0 - b.delta2;
    const std::size_t k = std::size_t(std::floor(b.delta1 / second));
    const double residual = b.delta1 - second * double(k);
    const std::size_t support = 1 + k + (residual > kSimplexTol ? 1 : 0);
    if (vocab_size < std::max<std::size_t>(support, 2))
        throw std::invalid_argument("least_favorable_general: vocab too small for support");
    std::vector<double> p(vocab_size, 0.0);
    p[0] = head;
    for (std::size_t i = 0; i < k; ++i) p[1 + i] = second;
    if (residual > kSimplexTol) p[1 + k] = residual;
    else if (k > 0) p[k] += residual;
    else p[0] += residual;
    return NtpDistribution(std::move(p));
}

inline bool is_delta_regular(const NtpDistribution& p, RegularityLevel delta) {
    return p.top1() <= 1.0 - delta.delta + kSimplexTol;
}

// ---------------------------------------------------------------------------
// NTP traces (recorded distributions or top-1 probabilities)
// ---------------------------------------------------------------------------

class NtpTrace {
public:
    static NtpTrace from_distributions(std::vector<NtpDistribution> rows) {
        NtpTrace t;
        t.top1_.reserve(rows.size());
        for (const auto& r : rows) t.top1_.push_back(r.top1());
        t.rows_ = std::move(rows);
        return t;
    }

    static NtpTrace from_top1(std::vector<double> values) {
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("NtpTrace: top1 value out of [0,1]");
        NtpTrace t;
        t.top1_ = std::move(values);
        return t;
    }

    std::size_t size() const { return top1_.size(); }
    const std::vector<double>& top1_values() const { return top1_; }
    bool has_full_rows() const { return !rows_.empty(); }
    const std::vector<NtpDistribution>& rows() const { return rows_; }

private:
    std::vector<NtpDistribution> rows_;
    std::vector<double> top1_;
};

// JSON schema: {"kind":"full","rows":[[p1,...],...]} or
// {"kind":"top1","values":[x1,...]}. Rows violating the simplex invariant are
// rejected with their index; no silent renormalization.
inline NtpTrace parse_trace(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "full") {
        std::vector<NtpDistribution> rows;
        std::size_t idx = 0;
        for (const auto& row : j.at("rows")) {
            try {
                rows.emplace_back(row.get<std::vector<double>>());
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("trace row " + std::to_string(idx) + ": " + e.what());
            }
            ++idx;
        }
        if (rows.empty()) throw std::invalid_argument("trace: no rows");
        return NtpTrace::from_distributions(std::move(rows));
    }
    if (kind == "top1") {
        auto values = j.at("values").get<std::vector<double>>();
        if (values.empty()) throw std::invalid_argument("trace: no values");
        return NtpTrace::from_top1(std::move(values));
    }
    throw std::invalid_argument("trace: unknown kind '" + kind + "'");
}

inline NtpTrace ingest_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_trace: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return parse_trace(j);
}

// Fraction of trace elements whose top-1 probability is <= 1-Delta.
inline double gamma_fraction(const NtpTrace& trace, RegularityLevel delta) {
    if (trace.size() == 0) throw std::invalid_argument("gamma_fraction: empty trace");
    std::size_t count = 0;
    for (double v : trace.top1_values())
        if (v <= 1.0 - delta.delta + kSimplexTol) ++count;
    return double(count) / double(trace.size());
}

// Default sweep grid: 200 log-spaced points on [lo, 0.5), then linear up to
// the class boundary 1-1/|W|.
inline std::vector<double> default_delta_grid(std::size_t vocab_size, double lo = 1e-3) {
    const double hi = 1.0 - 1.0 / double(vocab_size);
    std::vector<double> grid;
    const std::size_t n_log = 200;
    for (std::size_t i = 0; i < n_log; ++i) {
        double t = double(i) / double(n_log);
        grid.push_back(lo * std::pow(0.5 / lo, t));
    }
    if (hi > 0.5) {
        const std::size_t n_lin = 100;
        for (std::size_t i = 0; i <= n_lin; ++i)
            grid.push_back(0.5 + (hi - 0.5) * double(i) / double(n_lin));
    }
    return grid;
}

} // namespace wmk
