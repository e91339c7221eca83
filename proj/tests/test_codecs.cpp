#include <catch2/catch_amalgamated.hpp>

#include "support/stat_tests.hpp"
#include "wmk/codecs.hpp"
#include "wmk/pivots.hpp"

using namespace wmk;

namespace {

// Independent keyed randomness stream for sampling-based checks: one digest
// per index, distinct windows so digests are independent for all purposes.
Digest digest_for(std::uint32_t i, const char* tag) {
    SecretKey key{std::string(tag)};
    PrngConfig cfg;
    return derive_seed(key, {i + 1, 2 * i + 7}, cfg);
}

} // namespace

TEST_CASE("decode_gumbel is unbiased (chi-square)") {
    NtpDistribution p({0.5, 0.25, 0.15, 0.1});
    const std::size_t reps = 40000;
    std::vector<double> counts(4, 0.0), expect;
    for (double pw : p.probs()) expect.push_back(pw * double(reps));
    for (std::uint32_t i = 0; i < reps; ++i) {
        auto xi = std::get<GumbelUniforms>(bundle_for_step(digest_for(i, "gum"), Scheme::Gumbel, 4));
        counts[decode_gumbel(p, xi) - 1] += 1.0;
    }
    REQUIRE(stat_tests::chi2_gof(counts, expect) > 1e-4);
}

TEST_CASE("decode_gumbel skips zero-probability tokens") {
    NtpDistribution p({0.0, 0.6, 0.4, 0.0});
    for (std::uint32_t i = 0; i < 200; ++i) {
        auto xi = std::get<GumbelUniforms>(bundle_for_step(digest_for(i, "z"), Scheme::Gumbel, 4));
        TokenId w = decode_gumbel(p, xi);
        REQUIRE((w == 2 || w == 3));
    }
}

TEST_CASE("decode_inverse is unbiased (chi-square)") {
    NtpDistribution p({0.4, 0.3, 0.2, 0.1});
    const std::size_t reps = 40000;
    std::vector<double> counts(4, 0.0), expect;
    for (double pw : p.probs()) expect.push_back(pw * double(reps));
    for (std::uint32_t i = 0; i < reps; ++i) {
        auto xi = std::get<InverseTransformXi>(
            bundle_for_step(digest_for(i, "inv"), Scheme::InverseTransform, 4));
        counts[decode_inverse(p, xi) - 1] += 1.0;
    }
    REQUIRE(stat_tests::chi2_gof(counts, expect) > 1e-4);
}

TEST_CASE("decode_inverse tie at an exact cumulative boundary picks the smaller position") {
    NtpDistribution p({0.25, 0.75});
    // identity permutation, U exactly at the first cumulative sum
    InverseTransformXi xi{Permutation::identity(2), 0.25};
    REQUIRE(decode_inverse(p, xi) == 1);
    xi.u = 0.25000001;
    REQUIRE(decode_inverse(p, xi) == 2);
    xi.u = 0.0; // cum >= 0 already at the first token
    REQUIRE(decode_inverse(p, xi) == 1);
}

TEST_CASE("decode_baby is unbiased and thresholds at P_0") {
    NtpDistribution p({0.3, 0.7});
    REQUIRE(decode_baby(p, BabyUniform{0.3}) == 0);
    REQUIRE(decode_baby(p, BabyUniform{0.30001}) == 1);
    std::size_t zeros = 0;
    const std::size_t reps = 40000;
    for (std::uint32_t i = 0; i < reps; ++i) {
        auto xi = std::get<BabyUniform>(bundle_for_step(digest_for(i, "baby"), Scheme::Baby, 2));
        if (decode_baby(p, xi) == 0) ++zeros;
    }
    const double phat = double(zeros) / double(reps);
    REQUIRE(phat == Catch::Approx(0.3).margin(4.0 * std::sqrt(0.3 * 0.7 / double(reps))));
    REQUIRE_THROWS_AS(decode_baby(NtpDistribution({0.2, 0.3, 0.5}), BabyUniform{0.1}),
                      std::invalid_argument);
}

TEST_CASE("gluing: the selected Gumbel coordinate has CDF sum_w P_w r^{1/P_w}") {
    NtpDistribution p({0.6, 0.3, 0.1});
    std::vector<double> pivots;
    for (std::uint32_t i = 0; i < 20000; ++i) {
        auto xi = std::get<GumbelUniforms>(bundle_for_step(digest_for(i, "glue"), Scheme::Gumbel, 3));
        pivots.push_back(pivot_gumbel(decode_gumbel(p, xi), xi).y);
    }
    const double pval =
        stat_tests::ks_one_sample(pivots, [&](double r) { return cdf_gum_alt(p, r); });
    REQUIRE(pval > 1e-4);
}

TEST_CASE("Gumbel pairwise selection: P(w=1 | w in {1,2}) = P_1/(P_1+P_2)") {
    NtpDistribution p({0.5, 0.3, 0.2});
    std::size_t first = 0, either = 0;
    for (std::uint32_t i = 0; i < 60000; ++i) {
        auto xi = std::get<GumbelUniforms>(bundle_for_step(digest_for(i, "pair"), Scheme::Gumbel, 3));
        TokenId w = decode_gumbel(p, xi);
        if (w == 1 || w == 2) {
            ++either;
            if (w == 1) ++first;
        }
    }
    const double phat = double(first) / double(either);
    const double target = 0.5 / 0.8;
    REQUIRE(phat == Catch::Approx(target).margin(4.0 * std::sqrt(target * (1 - target) / double(either))));
}

TEST_CASE("generate_sequence is deterministic and windows correctly") {
    SecretKey key(std::string("gen"));
    PrngConfig cfg;
    NtpDistribution p = make_spike(0.4, 50);
    auto src = [&](std::size_t) { return p; };
    auto a = generate_sequence(key, cfg, src, 40, Scheme::Gumbel);
    auto b = generate_sequence(key, cfg, src, 40, Scheme::Gumbel);
    REQUIRE(a.tokens == b.tokens);
    REQUIRE(a.tokens.size() == 40);
    REQUIRE(a.bundles.size() == 40);
    REQUIRE(a.ntp_used.size() == 40);

    // a prefix generates identically: step t depends only on the key and the
    // previous min(t, m) tokens
    auto c = generate_sequence(key, cfg, src, 10, Scheme::Gumbel);
    for (std::size_t t = 0; t < 10; ++t) REQUIRE(c.tokens[t] == a.tokens[t]);

    // a different key diverges
    auto d = generate_sequence(SecretKey(std::string("other")), cfg, src, 40, Scheme::Gumbel);
    REQUIRE(d.tokens != a.tokens);
}

TEST_CASE("generate_sequence bundles reproduce from the verifier side") {
    SecretKey key(std::string("verify"));
    PrngConfig cfg;
    NtpDistribution p = make_spike(0.5, 20);
    auto rec = generate_sequence(key, cfg, [&](std::size_t) { return p; }, 25,
                                 Scheme::InverseTransform);
    for (std::size_t t = 0; t < 25; ++t) {
        const std::size_t wlen = std::min(t, cfg.window_size);
        std::vector<TokenId> window(rec.tokens.begin() + std::ptrdiff_t(t - wlen),
                                    rec.tokens.begin() + std::ptrdiff_t(t));
        auto xi = std::get<InverseTransformXi>(
            bundle_for_step(derive_seed(key, window, cfg), Scheme::InverseTransform, 20));
        const auto& orig = std::get<InverseTransformXi>(rec.bundles[t]);
        REQUIRE(xi.u == orig.u);
        REQUIRE(xi.pi == orig.pi);
    }
}

TEST_CASE("clamp_unit keeps the open interval") {
    REQUIRE(clamp_unit(0.0) == 0x1.0p-53);
    REQUIRE(clamp_unit(1.0) == 1.0 - 0x1.0p-53);
    REQUIRE(clamp_unit(0.5) == 0.5);
}
