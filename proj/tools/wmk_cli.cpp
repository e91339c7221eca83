// Command-line front end: watermarked generation, detection, synthetic
// Type I / Type II studies, efficiency sweeps, the gamma*R tradeoff, and the
// ars/log crossover solver.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wmk/codecs.hpp"
#include "wmk/detection.hpp"
#include "wmk/efficiency.hpp"
#include "wmk/harness.hpp"
#include "wmk/ntp.hpp"
#include "wmk/prng.hpp"
#include "wmk/scores.hpp"

namespace {

wmk::Scheme parse_scheme(const std::string& s) {
    if (s == "gumbel") return wmk::Scheme::Gumbel;
    if (s == "inverse") return wmk::Scheme::InverseTransform;
    if (s == "baby") return wmk::Scheme::Baby;
    throw CLI::ValidationError("scheme must be gumbel | inverse | baby");
}

wmk::PivotFamily family_for(wmk::Scheme s) {
    switch (s) {
    case wmk::Scheme::Gumbel: return wmk::PivotFamily::Gum;
    case wmk::Scheme::InverseTransform: return wmk::PivotFamily::Dif;
    case wmk::Scheme::Baby: return wmk::PivotFamily::Baby;
    }
    throw std::logic_error("unknown scheme");
}

std::vector<wmk::ScoreSpec> parse_scores(const std::vector<std::string>& names) {
    std::vector<wmk::ScoreSpec> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(wmk::parse_score(n));
    return out;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << '\n';
}

std::vector<double> make_grid(double lo, double hi, std::size_t points) {
    if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw std::runtime_error("bad delta grid");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo * std::pow(hi / lo, double(i) / double(points - 1));
    return g;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyed statistical watermarks for token streams"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string key_text = "default-key";
    std::string scheme_name = "gumbel";
    std::string in_path, out_path;
    std::string trace_path;
    std::vector<std::string> score_names;
    std::size_t n = 500, vocab = 1000, replicates = 1000, grid_points = 40;
    std::vector<std::size_t> n_grid;
    double alpha = 0.05, delta = 0.2, delta_lo = 1e-3, delta_hi = 0.5;
    double lo = 0.01, hi = 0.5;
    std::uint64_t seed = 0;
    std::size_t window = wmk::PrngConfig{}.window_size;
    bool monte_carlo = false;

    auto* gen = app.add_subcommand("generate", "Generate a watermarked token sequence");
    gen->add_option("--key", key_text, "Secret key (text)");
    gen->add_option("--scheme", scheme_name, "gumbel | inverse | baby");
    gen->add_option("--n", n, "Sequence length");
    gen->add_option("--vocab", vocab, "Vocabulary size");
    gen->add_option("--delta", delta, "Spike regularity level (synthetic source)");
    gen->add_option("--window", window, "Context window hashed into the seed");
    gen->add_option("--trace", trace_path, "NTP trace JSON (kind=full) used as the source");
    gen->add_option("--out", out_path, "Output JSON path ('-' for stdout)");

    auto* det = app.add_subcommand("detect", "Run the watermark detector on a token sequence");
    det->add_option("--key", key_text, "Secret key (text)");
    det->add_option("--scheme", scheme_name, "gumbel | inverse | baby");
    det->add_option("--score", score_names, "Score, e.g. ars, log, gum_opt(delta=0.5)")->expected(1);
    det->add_option("--alpha", alpha, "Significance level");
    det->add_option("--vocab", vocab, "Vocabulary size");
    det->add_option("--window", window, "Context window hashed into the seed");
    det->add_option("--in", in_path, "Input JSON with a \"tokens\" array")->required();
    det->add_flag("--monte-carlo", monte_carlo, "Monte Carlo critical value instead of Gaussian");
    det->add_option("--seed", seed, "Monte Carlo seed");

    auto* t1 = app.add_subcommand("type1", "Type I error frequency on unwatermarked tokens");
    t1->add_option("--score", score_names, "Scores to test")->expected(-1);
    t1->add_option("--n", n_grid, "Sequence lengths")->expected(-1);
    t1->add_option("--vocab", vocab, "Vocabulary size");
    t1->add_option("--replicates", replicates, "Replicates per length");
    t1->add_option("--alpha", alpha, "Significance level");
    t1->add_option("--seed", seed, "Master seed");
    t1->add_option("--out", out_path, "CSV output path")->required();

    auto* t2 = app.add_subcommand("type2", "Type II error frequency on watermarked tokens");
    t2->add_option("--scheme", scheme_name, "gumbel | inverse");
    t2->add_option("--score", score_names, "Scores to test")->expected(-1);
    t2->add_option("--n", n_grid, "Sequence lengths")->expected(-1);
    t2->add_option("--vocab", vocab, "Vocabulary size");
    t2->add_option("--replicates", replicates, "Replicates per length");
    t2->add_option("--alpha", alpha, "Significance level");
    t2->add_option("--delta-lo", delta_lo, "Lower end of the Delta_t sampling range");
    t2->add_option("--delta-hi", delta_hi, "Upper end of the Delta_t sampling range");
    t2->add_option("--seed", seed, "Master seed");
    t2->add_option("--out", out_path, "CSV output path")->required();

    auto* eff = app.add_subcommand("efficiency", "Efficiency rate curves over the Delta grid");
    eff->add_option("--score", score_names, "Scores to sweep")->expected(-1);
    eff->add_option("--lo", lo, "Grid lower end");
    eff->add_option("--hi", hi, "Grid upper end");
    eff->add_option("--points", grid_points, "Grid size (log-spaced)");
    eff->add_option("--out", out_path, "CSV output path")->required();

    auto* tr = app.add_subcommand("tradeoff", "gamma(Delta) * R(Delta) tradeoff from a trace");
    tr->add_option("--trace", trace_path, "NTP trace JSON")->required();
    tr->add_option("--score", score_names, "Scores to sweep")->expected(-1);
    tr->add_option("--lo", lo, "Grid lower end");
    tr->add_option("--hi", hi, "Grid upper end");
    tr->add_option("--points", grid_points, "Grid size (log-spaced)");
    tr->add_option("--out", out_path, "CSV output path")->required();

    auto* cx = app.add_subcommand("crossover", "Delta where two rate curves cross");
    cx->add_option("--score", score_names, "Exactly two scores")->expected(2);
    cx->add_option("--lo", lo, "Bracket lower end");
    cx->add_option("--hi", hi, "Bracket upper end");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const wmk::Scheme scheme = parse_scheme(scheme_name);
            const wmk::SecretKey key(key_text);
            wmk::PrngConfig prng;
            prng.window_size = window;
            wmk::NtpSource source;
            if (!trace_path.empty()) {
                auto trace = wmk::ingest_trace(trace_path);
                if (!trace.has_full_rows())
                    throw std::runtime_error("generate: trace must have kind=full rows");
                if (n > trace.size()) n = trace.size();
                source = [rows = trace.rows()](std::size_t t) { return rows[t]; };
            } else {
                const wmk::NtpDistribution p = wmk::make_spike(delta, vocab);
                source = [p](std::size_t) { return p; };
            }
            auto rec = wmk::generate_sequence(key, prng, source, n, scheme);
            write_json(out_path, nlohmann::json{{"scheme", scheme_name},
                                                {"vocab", vocab},
                                                {"tokens", rec.tokens}});
        } else if (det->parsed()) {
            const wmk::Scheme scheme = parse_scheme(scheme_name);
            const wmk::SecretKey key(key_text);
            const auto spec = wmk::parse_score(score_names.at(0));
            const auto j = read_json(in_path);
            const auto tokens = j.at("tokens").get<std::vector<wmk::TokenId>>();
            wmk::PrngConfig prng;
            prng.window_size = window;
            const auto series =
                wmk::pivots_from_tokens(key, prng, tokens, family_for(scheme), vocab);
            wmk::DetectionConfig cfg;
            cfg.alpha = alpha;
            cfg.vocab_size = vocab;
            cfg.critical_mode = monte_carlo ? wmk::DetectionConfig::CriticalMode::MonteCarlo
                                            : wmk::DetectionConfig::CriticalMode::Gaussian;
            write_json("-", wmk::report_to_json(wmk::detect(series, spec, cfg, seed)));
        } else if (t1->parsed() || t2->parsed()) {
            wmk::ExperimentConfig cfg;
            cfg.scores = parse_scores(score_names);
            cfg.vocab_size = vocab;
            cfg.n_grid = n_grid.empty() ? std::vector<std::size_t>{300, 500} : n_grid;
            cfg.replicates = replicates;
            cfg.alpha = alpha;
            cfg.delta_lo = delta_lo;
            cfg.delta_hi = delta_hi;
            cfg.master_seed = seed;
            const auto points = t1->parsed()
                                    ? wmk::run_type1(cfg)
                                    : wmk::run_type2(cfg, parse_scheme(scheme_name));
            wmk::write_curve_csv(out_path, points);
            std::cout << "wrote " << points.size() << " rows to " << out_path << '\n';
        } else if (eff->parsed()) {
            const auto rows =
                wmk::run_efficiency_sweep(parse_scores(score_names), make_grid(lo, hi, grid_points));
            wmk::write_efficiency_csv(out_path, rows);
            std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
        } else if (tr->parsed()) {
            const auto rows = wmk::run_tradeoff(wmk::ingest_trace(trace_path),
                                                parse_scores(score_names),
                                                make_grid(lo, hi, grid_points));
            wmk::write_tradeoff_csv(out_path, rows);
            std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
        } else if (cx->parsed()) {
            const auto specs = parse_scores(score_names);
            const double d = wmk::crossover_delta(specs.at(0), specs.at(1), lo, hi);
            std::cout.precision(10);
            std::cout << "crossover_delta " << d << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
