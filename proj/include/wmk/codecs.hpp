#pragma once

// The three watermark decoders and the end-to-end watermarked sequence
// generator. All decoders are unbiased: the decoded token's law equals the
// NTP distribution when the randomness is uniform.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wmk/ntp.hpp"
#include "wmk/prng.hpp"

namespace wmk {

// Gumbel-max: argmax over supported tokens of log(U_w)/P_w.
inline TokenId decode_gumbel(const NtpDistribution& p, const GumbelUniforms& xi) {
    if (p.vocab_size() != xi.u.size())
        throw std::invalid_argument("decode_gumbel: vocabulary size mismatch");
    TokenId best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t w = 1; w <= p.vocab_size(); ++w) {
        const double pw = p[w];
        if (pw == 0.0) continue;
        const double val = std::log(clamp_unit(xi.u[w - 1])) / pw;
        if (val > best_val) {
            best_val = val;
            best = TokenId(w);
        }
    }
    if (best == 0) throw std::runtime_error("decode_gumbel: degenerate randomness");
    return best;
}

// Inverse transform: invert the permuted CDF at U; ties at exact cumulative
// boundaries resolve to the smaller position.
inline TokenId decode_inverse(const NtpDistribution& p, const InverseTransformXi& xi) {
    if (p.vocab_size() != xi.pi.size())
        throw std::invalid_argument("decode_inverse: vocabulary size mismatch");
    double cum = 0.0;
    for (std::uint32_t pos = 1; pos <= p.vocab_size(); ++pos) {
        cum += p[xi.pi.token_at(pos)];
        if (cum >= xi.u) return xi.pi.token_at(pos);
    }
    return xi.pi.token_at(std::uint32_t(p.vocab_size())); // cum < u by rounding only
}

// Baby watermark on {0,1}: token 0 iff U <= P_0.
inline TokenId decode_baby(const NtpDistribution& p, const BabyUniform& xi) {
    if (p.vocab_size() != 2)
        throw std::invalid_argument("decode_baby: vocabulary must have exactly 2 tokens");
    return xi.u <= p[1] ? 0 : 1;
}

inline TokenId decode(const NtpDistribution& p, const RandomnessBundle& xi) {
    return std::visit(
        [&](const auto& b) -> TokenId {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, GumbelUniforms>) return decode_gumbel(p, b);
            else if constexpr (std::is_same_v<T, InverseTransformXi>) return decode_inverse(p, b);
            else return decode_baby(p, b);
        },
        xi);
}

struct GenerationRecord {
    std::vector<TokenId> tokens;
    std::vector<RandomnessBundle> bundles;
    std::vector<NtpDistribution> ntp_used; // retained for oracle tests
};

// Step-indexed supplier of NTP distributions (0-based step index).
using NtpSource = std::function<NtpDistribution(std::size_t)>;

// Iteratively derives xi_t from the last m tokens and the key, decodes w_t,
// and appends. Deterministic given (key, cfg, source, scheme).
inline GenerationRecord generate_sequence(const SecretKey& key, const PrngConfig& cfg,
                                          const NtpSource& source, std::size_t n, Scheme scheme) {
    if (n < 1) throw std::invalid_argument("generate_sequence: n must be >= 1");
    GenerationRecord rec;
    rec.tokens.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        NtpDistribution p = source(t);
        const std::size_t wlen = std::min(t, cfg.window_size);
        std::vector<TokenId> window(rec.tokens.end() - std::ptrdiff_t(wlen), rec.tokens.end());
        Digest d = derive_seed(key, window, cfg);
        RandomnessBundle xi = bundle_for_step(d, scheme, p.vocab_size());
        TokenId w = decode(p, xi);
        rec.tokens.push_back(w);
        rec.bundles.push_back(std::move(xi));
        rec.ntp_used.push_back(std::move(p));
    }
    return rec;
}

} // namespace wmk
