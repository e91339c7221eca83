#pragma once

// Keyed pseudorandomness: derives a per-step seed from (secret key, token
// window) and expands it into the per-step random object used by each
// watermark scheme. The seed layout is normative: key bytes followed by the
// m window token ids as 4-byte big-endian integers, no separators.

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wmk {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadToken = 0;

// Uniform draws are clamped away from {0,1} before entering log ratios;
// removes a measure-zero singularity at double precision.
inline double clamp_unit(double u) {
    constexpr double lo = 0x1.0p-53;
    constexpr double hi = 1.0 - 0x1.0p-53;
    return u < lo ? lo : (u > hi ? hi : u);
}

class SecretKey {
public:
    explicit SecretKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
        if (bytes_.empty()) throw std::invalid_argument("SecretKey: empty key");
    }
    explicit SecretKey(const std::string& s)
        : SecretKey(std::vector<std::uint8_t>(s.begin(), s.end())) {}

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

struct PrngConfig {
    std::size_t window_size = 5;
    TokenId pad_token = kPadToken;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (window_size < 1) throw std::invalid_argument("PrngConfig: window_size must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), self-contained so the seed derivation has no link
// dependency.
// ---------------------------------------------------------------------------

namespace detail {

struct Sha256 {
    std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                   0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::array<std::uint8_t, 64> buf{};
    std::uint64_t total = 0;
    std::size_t fill = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void compress(const std::uint8_t* p) {
        static constexpr std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
        std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = hh + S1 + ch + K[i] + w[i];
            std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = S0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const std::uint8_t* data, std::size_t len) {
        total += len;
        while (len > 0) {
            std::size_t take = std::min(len, buf.size() - fill);
            std::memcpy(buf.data() + fill, data, take);
            fill += take;
            data += take;
            len -= take;
            if (fill == 64) {
                compress(buf.data());
                fill = 0;
            }
        }
    }

    std::array<std::uint8_t, 32> finish() {
        std::uint64_t bits = total * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        std::uint8_t zero = 0;
        while (fill != 56) update(&zero, 1);
        std::uint8_t lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = std::uint8_t(bits >> (56 - 8 * i));
        update(lenb, 8);
        std::array<std::uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 4; ++j) out[4 * i + j] = std::uint8_t(h[i] >> (24 - 8 * j));
        return out;
    }
};

} // namespace detail

using Digest = std::array<std::uint8_t, 32>;

// digest = SHA-256(key bytes || m big-endian 4-byte token ids). The window
// holds the last min(t-1, m) tokens; shorter windows are left-padded with
// cfg.pad_token.
inline Digest derive_seed(const SecretKey& key, const std::vector<TokenId>& window,
                          const PrngConfig& cfg) {
    cfg.validate();
    if (window.size() > cfg.window_size)
        throw std::invalid_argument("derive_seed: window longer than window_size");
    detail::Sha256 sha;
    sha.update(key.bytes().data(), key.bytes().size());
    const std::size_t npad = cfg.window_size - window.size();
    auto put_token = [&](TokenId t) {
        std::uint8_t be[4] = {std::uint8_t(t >> 24), std::uint8_t(t >> 16), std::uint8_t(t >> 8),
                              std::uint8_t(t)};
        sha.update(be, 4);
    };
    for (std::size_t i = 0; i < npad; ++i) put_token(cfg.pad_token);
    for (TokenId t : window) put_token(t);
    return sha.finish();
}

// ---------------------------------------------------------------------------
// PCG64 (XSL-RR 128/64). Supports log-time jump-ahead so a single uniform
// coordinate of a long stream can be read without drawing its predecessors.
// ---------------------------------------------------------------------------

class Pcg64 {
public:
    using u128 = unsigned __int128;

    Pcg64(std::uint64_t seed_hi, std::uint64_t seed_lo, std::uint64_t stream_hi,
          std::uint64_t stream_lo) {
        u128 initstate = (u128(seed_hi) << 64) | seed_lo;
        u128 initseq = (u128(stream_hi) << 64) | stream_lo;
        inc_ = (initseq << 1) | 1;
        state_ = 0;
        step();
        state_ += initstate;
        step();
    }

    explicit Pcg64(std::uint64_t seed) : Pcg64(0, seed, 0, 0xda3e39cb94b95bdbULL) {}

    // Seeded from the first 16 digest bytes; fixed stream selector.
    explicit Pcg64(const Digest& d)
        : Pcg64(load64(d.data()), load64(d.data() + 8), 0, 0xda3e39cb94b95bdbULL) {}

    std::uint64_t next() {
        u128 old = state_;
        step();
        std::uint64_t xored = std::uint64_t(old >> 64) ^ std::uint64_t(old);
        int rot = int(old >> 122);
        return (xored >> rot) | (xored << ((-rot) & 63));
    }

    // Uniform in [0,1) from the 53 high-order bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t bounded(std::uint64_t bound) {
        std::uint64_t threshold = (-bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Advance the stream by `delta` outputs in O(log delta).
    void advance(std::uint64_t delta) {
        u128 cur_mult = kMult, cur_plus = inc_;
        u128 acc_mult = 1, acc_plus = 0;
        while (delta > 0) {
            if (delta & 1) {
                acc_mult *= cur_mult;
                acc_plus = acc_plus * cur_mult + cur_plus;
            }
            cur_plus = (cur_mult + 1) * cur_plus;
            cur_mult *= cur_mult;
            delta >>= 1;
        }
        state_ = acc_mult * state_ + acc_plus;
    }

private:
    static constexpr u128 kMult = (u128(2549297995355413924ULL) << 64) | 4865540595714422341ULL;

    static std::uint64_t load64(const std::uint8_t* p) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
        return v;
    }

    void step() { state_ = state_ * kMult + inc_; }

    u128 state_;
    u128 inc_;
};

// ---------------------------------------------------------------------------
// Permutation and randomness bundles
// ---------------------------------------------------------------------------

class Permutation {
public:
    // mapping[w] = position of token w+1, 1-based on both sides.
    explicit Permutation(std::vector<std::uint32_t> mapping) : map_(std::move(mapping)) {
        inv_.assign(map_.size(), 0);
        std::vector<bool> seen(map_.size(), false);
        for (std::size_t w = 0; w < map_.size(); ++w) {
            std::uint32_t pos = map_[w];
            if (pos < 1 || pos > map_.size() || seen[pos - 1])
                throw std::invalid_argument("Permutation: mapping is not a bijection");
            seen[pos - 1] = true;
            inv_[pos - 1] = std::uint32_t(w + 1);
        }
    }

    static Permutation identity(std::size_t n) {
        std::vector<std::uint32_t> m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = std::uint32_t(i + 1);
        return Permutation(std::move(m));
    }

    std::size_t size() const { return map_.size(); }
    std::uint32_t position_of(TokenId w) const { return map_.at(w - 1); }
    TokenId token_at(std::uint32_t pos) const { return inv_.at(pos - 1); }

    bool operator==(const Permutation& o) const { return map_ == o.map_; }

private:
    std::vector<std::uint32_t> map_;
    std::vector<std::uint32_t> inv_;
};

// Fisher-Yates shuffle of the identity, consuming rejection-sampled bounded
// draws; uniform over all n! permutations when the generator is uniform.
inline Permutation sample_permutation(Pcg64& gen, std::size_t n) {
    if (n < 1) throw std::invalid_argument("sample_permutation: n must be >= 1");
    std::vector<std::uint32_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = std::uint32_t(i + 1);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = std::size_t(gen.bounded(i + 1));
        std::swap(pos[i], pos[j]);
    }
    return Permutation(std::move(pos));
}

enum class Scheme { Gumbel, InverseTransform, Baby };

struct GumbelUniforms {
    std::vector<double> u; // one uniform per token, index w-1
};

struct InverseTransformXi {
    Permutation pi;
    double u;
};

struct BabyUniform {
    double u;
};

using RandomnessBundle = std::variant<GumbelUniforms, InverseTransformXi, BabyUniform>;

inline RandomnessBundle bundle_for_step(const Digest& digest, Scheme scheme,
                                        std::size_t vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("bundle_for_step: vocab_size must be >= 2");
    Pcg64 gen(digest);
    switch (scheme) {
    case Scheme::Gumbel: {
        GumbelUniforms g;
        g.u.resize(vocab_size);
        for (auto& x : g.u) x = gen.uniform();
        return g;
    }
    case Scheme::InverseTransform: {
        double u = gen.uniform();
        return InverseTransformXi{sample_permutation(gen, vocab_size), u};
    }
    case Scheme::Baby:
        return BabyUniform{gen.uniform()};
    }
    throw std::logic_error("bundle_for_step: unknown scheme");
}

// Single Gumbel coordinate U_w without materializing the whole vector.
inline double gumbel_coordinate(const Digest& digest, TokenId w) {
    Pcg64 gen(digest);
    if (w > 1) gen.advance(w - 1);
    return gen.uniform();
}

} // namespace wmk
