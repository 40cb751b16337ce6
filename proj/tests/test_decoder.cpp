#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sepcount/decoder.hpp"
#include "sepcount/errors.hpp"
#include "sepcount/rng.hpp"

using namespace sepcount;

namespace {

// Projection-form SI-SNR oracle: s_t = (<s,ŝ>/||s||²)·s, e = ŝ − s_t,
// 10·log10(||s_t||²/||e||²).
double si_snr_projection(const Waveform& s, const Waveform& est) {
    double dot = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        dot += s[i] * est[i];
        ss += s[i] * s[i];
    }
    const double alpha = dot / ss;
    double target = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = alpha * s[i];
        target += t * t;
        const double e = est[i] - t;
        noise += e * e;
    }
    return 10.0 * std::log10(target / noise);
}

}  // namespace

TEST_CASE("si_snr hand values") {
    // est == ref: ratio limited only by eps.
    Waveform s{1.0, -0.5, 0.25, 0.7};
    CHECK(si_snr(s, s) > 80.0);
    // ref [1,0], est [1,1]: projection leaves error [0,1], target [1,0] -> 0 dB.
    Waveform r{1.0, 0.0};
    Waveform e{1.0, 1.0};
    CHECK(si_snr(r, e) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("si_snr equals the projection form") {
    // Large-amplitude, high-SNR pairs keep both ε terms negligible.
    Rng rng = make_rng(1, "proj");
    for (int t = 0; t < 1000; ++t) {
        Waveform s(32), e(32);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = 10.0 * gaussian(rng);
            e[i] = s[i] + 0.5 * gaussian(rng);
        }
        CHECK(std::abs(si_snr(s, e) - si_snr_projection(s, e)) < 1e-9);
    }
}

TEST_CASE("si_snr is scale invariant in the estimate") {
    Rng rng = make_rng(2, "scale");
    Waveform s(64), e(64);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = 10.0 * gaussian(rng);
        e[i] = s[i] + 0.3 * gaussian(rng);
    }
    const double base = si_snr(s, e);
    for (double alpha : {0.1, 3.0, -2.0}) {
        Waveform scaled(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) scaled[i] = alpha * e[i];
        CHECK(std::abs(si_snr(s, scaled) - base) < 1e-9);
    }
}

TEST_CASE("si_snr rejects length mismatch") {
    CHECK_THROWS_AS(si_snr(Waveform(8), Waveform(9)), ShapeError);
}

TEST_CASE("pit_loss equals exhaustive permutation search") {
    Rng rng = make_rng(3, "pit");
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t c = 2 + trial % 3;  // 2..4
        std::vector<Waveform> sources(c, Waveform(40)), est(c, Waveform(40));
        for (auto& s : sources)
            for (auto& v : s) v = gaussian(rng);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < 40; ++j)
                est[i][j] = sources[(i + 1) % c][j] + 0.2 * gaussian(rng);

        LossReport got = pit_loss(sources, est);

        // Independent exhaustive search.
        std::vector<std::size_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> best_perm;
        do {
            double loss = 0.0;
            for (std::size_t i = 0; i < c; ++i) loss -= si_snr(sources[perm[i]], est[i]);
            loss /= static_cast<double>(c);
            if (loss < best) {
                best = loss;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        CHECK(got.loss == doctest::Approx(best).epsilon(1e-12));
        CHECK(got.permutation == best_perm);
    }
}

TEST_CASE("pit_loss caps the source count") {
    std::vector<Waveform> five(5, Waveform(10, 0.1));
    CHECK_THROWS_AS(pit_loss(five, five), ConfigError);
}

TEST_CASE("deconv emits an impulse response per unit column") {
    Rng rng = make_rng(4, "dec");
    Deconv dec;
    dec.init(3, rng);
    // Single active channel at one time step reproduces that kernel at the
    // right offset.
    Tensor masked({3, 4}, 0.0);
    masked.at(1, 2) = 1.0;
    Waveform y = dec.forward(masked);
    REQUIRE(y.size() == 3 * 10 + 20);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double expect =
            (i >= 20 && i < 40) ? dec.kernels.at(1, i - 20) : 0.0;
        CHECK(y[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("deconv is linear") {
    Rng rng = make_rng(5, "lin");
    Deconv dec;
    dec.init(4, rng);
    Tensor a({4, 6}), b({4, 6});
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = gaussian(rng);
        b[i] = gaussian(rng);
    }
    Tensor sum({4, 6});
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = 1.5 * a[i] - 0.5 * b[i];
    Waveform ya = dec.forward(a), yb = dec.forward(b), ys = dec.forward(sum);
    for (std::size_t i = 0; i < ys.size(); ++i)
        CHECK(ys[i] == doctest::Approx(1.5 * ya[i] - 0.5 * yb[i]).epsilon(1e-9));
}

TEST_CASE("apply_mask multiplies one source slice") {
    Tensor masks({2, 2, 2}, 0.0);
    masks.at(1, 0, 1) = 0.5;
    Tensor feat = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor m = apply_mask(masks, 1, feat);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(0, 1) == doctest::Approx(1.0));
    CHECK(m.at(1, 1) == 0.0);
}
