#pragma once

// Sum test statistic, critical values (Gaussian and Monte Carlo), and the
// detection decision. Reject when sum_t h(Y_t) >= gamma_{n,alpha}.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include <boost/math/distributions/normal.hpp>

#include "wmk/prng.hpp"
#include "wmk/scores.hpp"

namespace wmk {

struct DetectionConfig {
    double alpha = 0.05;
    enum class CriticalMode { Gaussian, MonteCarlo } critical_mode = CriticalMode::Gaussian;
    std::size_t mc_replicates = 500;
    std::size_t mc_batches = 10;
    std::size_t vocab_size = 0; // active |W|, needed by dif-family null laws

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("DetectionConfig: alpha must be in (0,1)");
        if (mc_replicates < 100)
            throw std::invalid_argument("DetectionConfig: mc_replicates must be >= 100");
        if (mc_batches < 1) throw std::invalid_argument("DetectionConfig: mc_batches must be >= 1");
    }
};

struct DetectionReport {
    double statistic;
    double critical_value;
    bool reject;
    std::size_t n;
    double approx_p;
    std::string mode; // "gaussian" or "monte_carlo"
    double alpha;
};

inline double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_cdf(double x) {
    return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

// Compensated sum of scores over the series.
inline double sum_statistic(const PivotSeries& series, const ScoreSpec& spec) {
    if (series.values.empty()) throw std::invalid_argument("sum_statistic: empty series");
    if (series.family != spec.family())
        throw std::invalid_argument("sum_statistic: pivot family does not match score");
    double sum = 0.0, c = 0.0;
    for (double y : series.values) {
        const double term = score_eval(spec, y);
        const double d = term - c, t = sum + d;
        c = (t - sum) - d;
        sum = t;
    }
    return sum;
}

// gamma_hat = n*E0[h] + z_{1-alpha} * sqrt(n*Var0[h]).
inline double critical_gaussian(const ScoreSpec& spec, std::size_t n, double alpha,
                                std::size_t vocab_size = 0) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("critical_gaussian: alpha must be in (0,1)");
    const NullMoments m = null_moments(spec, vocab_size);
    if (!m.mean_finite)
        throw std::domain_error("critical_gaussian: infinite null mean, use Monte Carlo");
    return double(n) * m.mean + normal_quantile(1.0 - alpha) * std::sqrt(double(n) * m.variance);
}

// One pivot from the null law of the score's family. Under the null the gum
// pivot is uniform; the dif pivot is |U - eta(I)| with I uniform over
// positions; the baby pivot is (2w-1)(2U-1) with w an independent coin.
inline double sample_null_pivot(const ScoreSpec& spec, Pcg64& gen, std::size_t vocab_size) {
    switch (spec.family()) {
    case PivotFamily::Gum: return gen.uniform();
    case PivotFamily::Dif: {
        if (vocab_size < 2)
            throw std::invalid_argument("sample_null_pivot: dif family needs vocab size");
        const std::uint32_t i = std::uint32_t(gen.bounded(vocab_size)) + 1;
        return std::abs(gen.uniform() - dif_eta(i, vocab_size));
    }
    case PivotFamily::Baby: {
        const double w = gen.bounded(2) ? 1.0 : -1.0;
        return w * (2.0 * gen.uniform() - 1.0);
    }
    }
    throw std::logic_error("sample_null_pivot: unknown family");
}

// Mean over batches of the empirical (1-alpha) quantile of null sums;
// deterministic given the seed, each batch refreshes its pivot pool.
inline double critical_monte_carlo(const ScoreSpec& spec, std::size_t n, double alpha,
                                   const DetectionConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("critical_monte_carlo: alpha must be in (0,1)");
    std::vector<double> batch_quantiles;
    batch_quantiles.reserve(cfg.mc_batches);
    for (std::size_t b = 0; b < cfg.mc_batches; ++b) {
        Pcg64 gen(0, seed, 0, b + 1); // per-batch substream
        std::vector<double> sums(cfg.mc_replicates);
        for (auto& s : sums) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                acc += score_eval(spec, sample_null_pivot(spec, gen, cfg.vocab_size));
            s = acc;
        }
        std::sort(sums.begin(), sums.end());
        const std::size_t rank =
            std::min(sums.size() - 1, std::size_t(std::ceil((1.0 - alpha) * double(sums.size()))));
        batch_quantiles.push_back(sums[rank]);
    }
    std::sort(batch_quantiles.begin(), batch_quantiles.end());
    double sum = 0.0;
    for (double q : batch_quantiles) sum += q;
    return sum / double(batch_quantiles.size());
}

inline DetectionReport detect(const PivotSeries& series, const ScoreSpec& spec,
                              const DetectionConfig& cfg, std::uint64_t mc_seed = 0) {
    cfg.validate();
    const std::size_t n = series.values.size();
    const double stat = sum_statistic(series, spec);
    DetectionReport rep{};
    rep.statistic = stat;
    rep.n = n;
    rep.alpha = cfg.alpha;
    const bool gaussian = cfg.critical_mode == DetectionConfig::CriticalMode::Gaussian;
    if (gaussian) {
        rep.critical_value = critical_gaussian(spec, n, cfg.alpha, cfg.vocab_size);
        const NullMoments m = null_moments(spec, cfg.vocab_size);
        const double z = (stat - double(n) * m.mean) / std::sqrt(double(n) * m.variance);
        rep.approx_p = 1.0 - normal_cdf(z);
        rep.mode = "gaussian";
    } else {
        rep.critical_value = critical_monte_carlo(spec, n, cfg.alpha, cfg, mc_seed);
        // Tail frequency of null sums at the observed statistic.
        Pcg64 gen(0, mc_seed, 0, 0xabcd);
        std::size_t above = 0;
        for (std::size_t r = 0; r < cfg.mc_replicates; ++r) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                acc += score_eval(spec, sample_null_pivot(spec, gen, cfg.vocab_size));
            if (acc >= stat) ++above;
        }
        rep.approx_p = double(above) / double(cfg.mc_replicates);
        rep.mode = "monte_carlo";
    }
    rep.reject = rep.statistic >= rep.critical_value;
    return rep;
}

inline nlohmann::json report_to_json(const DetectionReport& r) {
    return {{"statistic", r.statistic}, {"critical_value", r.critical_value},
            {"mode", r.mode},           {"alpha", r.alpha},
            {"n", r.n},                 {"reject", r.reject},
            {"approx_p", r.approx_p}};
}

} // namespace wmk
