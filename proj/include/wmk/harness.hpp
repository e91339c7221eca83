#pragma once

// Experiment harness: synthetic Type I / Type II studies, efficiency sweeps,
// and the gamma(Delta)*R(Delta) tradeoff, emitting CSV for external plotting.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "wmk/codecs.hpp"
#include "wmk/detection.hpp"
#include "wmk/efficiency.hpp"
#include "wmk/ntp.hpp"
#include "wmk/pivots.hpp"
#include "wmk/prng.hpp"
#include "wmk/scores.hpp"

namespace wmk {

struct ExperimentConfig {
    std::vector<ScoreSpec> scores;
    std::size_t vocab_size = 1000;
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 5000;
    double alpha = 0.05;
    double delta_lo = 1e-3; // Delta_t ~ U[delta_lo, delta_hi] under H1
    double delta_hi = 0.5;
    std::uint64_t master_seed = 0;
    PrngConfig prng;

    void validate() const {
        if (scores.empty()) throw std::invalid_argument("ExperimentConfig: no scores");
        if (n_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty n grid");
        if (replicates < 1) throw std::invalid_argument("ExperimentConfig: replicates must be >= 1");
        if (vocab_size < 2) throw std::invalid_argument("ExperimentConfig: vocab too small");
    }
};

struct CurvePoint {
    std::string experiment;
    std::string score;
    double x; // n or delta
    double value;
    double stderr_;
};

inline void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_curve_csv: cannot open " + path);
    out << "experiment,score,n_or_delta,value,stderr\n";
    out << std::setprecision(12);
    for (const auto& p : points)
        out << p.experiment << ',' << p.score << ',' << p.x << ',' << p.value << ','
            << p.stderr_ << '\n';
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-replicate secret key derived from (master_seed, replicate index).
inline SecretKey replicate_key(std::uint64_t master_seed, std::uint64_t rep) {
    std::vector<std::uint8_t> bytes(16);
    std::uint64_t a = splitmix64(master_seed ^ rep);
    std::uint64_t b = splitmix64(a ^ 0x5851f42d4c957f2dULL);
    for (int i = 0; i < 8; ++i) {
        bytes[i] = std::uint8_t(a >> (8 * i));
        bytes[8 + i] = std::uint8_t(b >> (8 * i));
    }
    return SecretKey(std::move(bytes));
}

// Spike with its peak at an arbitrary token; keeps hash windows varied so
// repeated-context collisions stay negligible.
inline NtpDistribution spike_at(std::size_t peak, double delta, std::size_t vocab_size) {
    std::vector<double> p(vocab_size, delta / double(vocab_size - 1));
    p[peak - 1] = 1.0 - delta;
    return NtpDistribution(std::move(p));
}

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

struct FamilyNeed {
    bool gum = false;
    bool dif = false;
};

inline FamilyNeed families_of(const std::vector<ScoreSpec>& scores) {
    FamilyNeed need;
    for (const auto& s : scores) {
        if (s.family() == PivotFamily::Gum) need.gum = true;
        else if (s.family() == PivotFamily::Dif) need.dif = true;
        else throw std::invalid_argument("harness: baby scores are not part of the sweep");
    }
    return need;
}

// Critical value per score at length n: Gaussian when the null mean is
// finite, Monte Carlo otherwise (untruncated means never reach here; the
// truncated dif_opt has finite moments but we keep the simulated path for it,
// matching how its threshold is normally obtained).
inline double critical_for(const ScoreSpec& spec, std::size_t n, double alpha,
                           std::size_t vocab_size, std::uint64_t seed) {
    if (spec.kind == ScoreKind::DifOpt) {
        DetectionConfig cfg;
        cfg.alpha = alpha;
        cfg.vocab_size = vocab_size;
        return critical_monte_carlo(spec, n, alpha, cfg, seed);
    }
    return critical_gaussian(spec, n, alpha, vocab_size);
}

} // namespace detail

// Pivot series recomputed from a token sequence and the key, the verifier's
// side of the protocol.
inline PivotSeries pivots_from_tokens(const SecretKey& key, const PrngConfig& cfg,
                                      const std::vector<TokenId>& tokens, PivotFamily family,
                                      std::size_t vocab_size) {
    PivotSeries series;
    series.family = family;
    series.values.reserve(tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::size_t wlen = std::min(t, cfg.window_size);
        std::vector<TokenId> window(tokens.begin() + std::ptrdiff_t(t - wlen),
                                    tokens.begin() + std::ptrdiff_t(t));
        const Digest d = derive_seed(key, window, cfg);
        switch (family) {
        case PivotFamily::Gum:
            series.values.push_back(gumbel_coordinate(d, tokens[t]));
            break;
        case PivotFamily::Dif: {
            auto xi = std::get<InverseTransformXi>(
                bundle_for_step(d, Scheme::InverseTransform, vocab_size));
            series.values.push_back(pivot_dif(tokens[t], xi).y);
            break;
        }
        case PivotFamily::Baby: {
            auto xi = std::get<BabyUniform>(bundle_for_step(d, Scheme::Baby, vocab_size));
            series.values.push_back(pivot_baby(tokens[t], xi).y);
            break;
        }
        }
    }
    return series;
}

// Type I: unwatermarked tokens drawn uniformly, detection frequency at alpha.
inline std::vector<CurvePoint> run_type1(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto need = detail::families_of(cfg.scores);
    std::vector<CurvePoint> points;
    for (std::size_t n : cfg.n_grid) {
        std::vector<double> crits(cfg.scores.size());
        for (std::size_t s = 0; s < cfg.scores.size(); ++s)
            crits[s] = detail::critical_for(cfg.scores[s], n, cfg.alpha, cfg.vocab_size,
                                            cfg.master_seed ^ 0x7c1ULL);
        std::vector<std::vector<std::uint8_t>> rejected(
            cfg.scores.size(), std::vector<std::uint8_t>(cfg.replicates, 0));
        detail::parallel_for(cfg.replicates, [&](std::size_t rep) {
            Pcg64 rng(0, cfg.master_seed, 1, rep); // token stream
            std::vector<TokenId> tokens(n);
            for (auto& w : tokens) w = TokenId(rng.bounded(cfg.vocab_size)) + 1;
            const SecretKey key = detail::replicate_key(cfg.master_seed, rep);
            PivotSeries gum, dif;
            if (need.gum)
                gum = pivots_from_tokens(key, cfg.prng, tokens, PivotFamily::Gum, cfg.vocab_size);
            if (need.dif)
                dif = pivots_from_tokens(key, cfg.prng, tokens, PivotFamily::Dif, cfg.vocab_size);
            for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
                const auto& series = cfg.scores[s].family() == PivotFamily::Gum ? gum : dif;
                rejected[s][rep] = sum_statistic(series, cfg.scores[s]) >= crits[s] ? 1 : 0;
            }
        });
        for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
            std::size_t hits = 0;
            for (auto b : rejected[s]) hits += b;
            const double p = double(hits) / double(cfg.replicates);
            points.push_back({"typeI", cfg.scores[s].name(), double(n), p,
                              std::sqrt(p * (1.0 - p) / double(cfg.replicates))});
        }
    }
    return points;
}

// Type II: watermarked sequences from per-step spike NTPs with
// Delta_t ~ U[delta_lo, delta_hi]; value is the acceptance frequency.
inline std::vector<CurvePoint> run_type2(const ExperimentConfig& cfg, Scheme scheme) {
    cfg.validate();
    const PivotFamily family =
        scheme == Scheme::Gumbel ? PivotFamily::Gum : PivotFamily::Dif;
    for (const auto& s : cfg.scores)
        if (s.family() != family)
            throw std::invalid_argument("run_type2: score family does not match scheme");
    std::vector<CurvePoint> points;
    for (std::size_t n : cfg.n_grid) {
        std::vector<double> crits(cfg.scores.size());
        for (std::size_t s = 0; s < cfg.scores.size(); ++s)
            crits[s] = detail::critical_for(cfg.scores[s], n, cfg.alpha, cfg.vocab_size,
                                            cfg.master_seed ^ 0x7c2ULL);
        std::vector<std::vector<std::uint8_t>> accepted(
            cfg.scores.size(), std::vector<std::uint8_t>(cfg.replicates, 0));
        detail::parallel_for(cfg.replicates, [&](std::size_t rep) {
            Pcg64 rng(0, cfg.master_seed, 2, rep); // nuisance stream
            const SecretKey key = detail::replicate_key(cfg.master_seed, rep);
            auto source = [&](std::size_t) {
                const double delta =
                    cfg.delta_lo + (cfg.delta_hi - cfg.delta_lo) * rng.uniform();
                const std::size_t peak = std::size_t(rng.bounded(cfg.vocab_size)) + 1;
                return detail::spike_at(peak, delta, cfg.vocab_size);
            };
            GenerationRecord rec = generate_sequence(key, cfg.prng, source, n, scheme);
            PivotSeries series;
            series.family = family;
            series.values.reserve(n);
            for (std::size_t t = 0; t < n; ++t) {
                if (family == PivotFamily::Gum)
                    series.values.push_back(
                        pivot_gumbel(rec.tokens[t], std::get<GumbelUniforms>(rec.bundles[t])).y);
                else
                    series.values.push_back(
                        pivot_dif(rec.tokens[t], std::get<InverseTransformXi>(rec.bundles[t])).y);
            }
            for (std::size_t s = 0; s < cfg.scores.size(); ++s)
                accepted[s][rep] = sum_statistic(series, cfg.scores[s]) < crits[s] ? 1 : 0;
        });
        for (std::size_t s = 0; s < cfg.scores.size(); ++s) {
            std::size_t hits = 0;
            for (auto b : accepted[s]) hits += b;
            const double p = double(hits) / double(cfg.replicates);
            points.push_back({"typeII", cfg.scores[s].name(), double(n), p,
                              std::sqrt(p * (1.0 - p) / double(cfg.replicates))});
        }
    }
    return points;
}

struct EfficiencyCurveRow {
    std::string score;
    double delta;
    double rate;
    double theta_star;
};

inline std::vector<EfficiencyCurveRow> run_efficiency_sweep(const std::vector<ScoreSpec>& scores,
                                                            const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("run_efficiency_sweep: empty grid");
    std::vector<EfficiencyCurveRow> rows(scores.size() * grid.size());
    detail::parallel_for(grid.size(), [&](std::size_t g) {
        for (std::size_t s = 0; s < scores.size(); ++s) {
            // gum_opt and llr track the class level they are asked about
            ScoreSpec spec = scores[s];
            if (spec.kind == ScoreKind::GumOpt) spec = ScoreSpec::gum_opt(grid[g]);
            if (spec.kind == ScoreKind::Llr) spec = ScoreSpec::llr_least_favorable(grid[g]);
            const EfficiencyReport rep = class_rate(spec, grid[g]);
            rows[g * scores.size() + s] = {scores[s].name(), grid[g], rep.rate, rep.theta_star};
        }
    });
    return rows;
}

inline void write_efficiency_csv(const std::string& path,
                                 const std::vector<EfficiencyCurveRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_efficiency_csv: cannot open " + path);
    out << "score,delta,rate,theta_star\n" << std::setprecision(12);
    for (const auto& r : rows)
        out << r.score << ',' << r.delta << ',' << r.rate << ',' << r.theta_star << '\n';
}

struct TradeoffRow {
    std::string score;
    double delta;
    double gamma;
    double rate;
    double product;
};

// gamma(Delta) from the trace, R(Delta) from the class rate, and their
// product, whose argmax guides the choice of Delta.
inline std::vector<TradeoffRow> run_tradeoff(const NtpTrace& trace,
                                             const std::vector<ScoreSpec>& scores,
                                             const std::vector<double>& grid) {
    if (trace.size() == 0) throw std::invalid_argument("run_tradeoff: empty trace");
    std::vector<TradeoffRow> rows(scores.size() * grid.size());
    detail::parallel_for(grid.size(), [&](std::size_t g) {
        const double gamma = gamma_fraction(trace, grid[g]);
        for (std::size_t s = 0; s < scores.size(); ++s) {
            ScoreSpec spec = scores[s];
            if (spec.kind == ScoreKind::GumOpt) spec = ScoreSpec::gum_opt(grid[g]);
            const double r = class_rate(spec, grid[g]).rate;
            rows[g * scores.size() + s] = {scores[s].name(), grid[g], gamma, r, gamma * r};
        }
    });
    return rows;
}

inline void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_tradeoff_csv: cannot open " + path);
    out << "score,delta,gamma,rate,product\n" << std::setprecision(12);
    for (const auto& r : rows)
        out << r.score << ',' << r.delta << ',' << r.gamma << ',' << r.rate << ','
            << r.product << '\n';
    // argmax of the product per score, appended as summary rows
    std::map<std::string, const TradeoffRow*> best;
    for (const auto& r : rows) {
        auto& slot = best[r.score];
        if (!slot || r.product > slot->product) slot = &r;
    }
    for (const auto& [score, r] : best)
        out << "argmax_" << score << ',' << r->delta << ',' << r->gamma << ',' << r->rate << ','
            << r->product << '\n';
}

} // namespace wmk
