#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sepcount/dsp.hpp"
#include "sepcount/errors.hpp"
#include "sepcount/rng.hpp"
#include "sepcount/selfcheck.hpp"

using namespace sepcount;

TEST_CASE("sqrt-hann window identities") {
    auto w = sqrt_hann(20);
    REQUIRE(w.size() == 20);
    CHECK(w[0] == 0.0);
    // Periodic-Hann symmetry w[k] == w[n-k] for k >= 1.
    for (std::size_t k = 1; k < 20; ++k)
        CHECK(w[k] == doctest::Approx(w[20 - k]).epsilon(1e-12));
    // COLA identity at hop 10: w^2[k] + w^2[k+10] == 1.
    for (std::size_t k = 0; k < 10; ++k)
        CHECK(w[k] * w[k] + w[k + 10] * w[k + 10] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(sqrt_hann(19), ConfigError);
}

TEST_CASE("frame count and coverage") {
    CHECK(num_frames(20) == 1);
    CHECK(num_frames(30) == 2);
    CHECK(num_frames(8000) == 799);
    CHECK_THROWS_AS(num_frames(19), ShapeError);

    Waveform x(40);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    Tensor f = frame(x);
    REQUIRE(f.shape() == std::vector<std::size_t>{3, 20});
    auto w = sqrt_hann(20);
    // Frame 1 covers samples [10, 30).
    for (std::size_t k = 0; k < 20; ++k)
        CHECK(f.at(1, k) == doctest::Approx(x[10 + k] * w[k]).epsilon(1e-12));
}

TEST_CASE("COLA round trip, 100 random lengths") {
    for (const CheckResult& r : cola_suite(7, 100)) {
        INFO(r.name, ": ", r.detail);
        CHECK(r.pass);
    }
}

TEST_CASE("spectrogram shape and tone bin") {
    // A 2000 Hz cosine at fs 8000 with a 20-point DFT lands in bin
    // k = 2000 * 20 / 8000 = 5 exactly.
    const double fs = 8000.0, tone = 2000.0;
    Waveform x(800);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::cos(2.0 * std::numbers::pi * tone * static_cast<double>(i) / fs);
    Tensor spec = logmag_spectrogram(frame(x));
    REQUIRE(spec.dim(1) == 11);
    for (std::size_t t = 0; t < spec.dim(0); ++t) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 11; ++k)
            if (spec.at(t, k) > spec.at(t, best)) best = k;
        CHECK(best == 5);
    }
}

TEST_CASE("spectrogram log floor on silence") {
    Waveform x(200, 0.0);
    Tensor spec = logmag_spectrogram(frame(x));
    for (std::size_t i = 0; i < spec.size(); ++i)
        CHECK(spec[i] == doctest::Approx(std::log(kLogFloor)).epsilon(1e-12));
}

TEST_CASE("overlap-add output length") {
    Tensor frames({5, 20});
    CHECK(overlap_add(frames).size() == 4 * 10 + 20);
}

TEST_CASE("framing is linear") {
    Rng rng = make_rng(11, "linear");
    Waveform a(123), b(123);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = gaussian(rng);
        b[i] = gaussian(rng);
    }
    Waveform sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = 2.0 * a[i] - 3.0 * b[i];
    Tensor fa = frame(a), fb = frame(b), fs = frame(sum);
    for (std::size_t i = 0; i < fs.size(); ++i)
        CHECK(fs[i] == doctest::Approx(2.0 * fa[i] - 3.0 * fb[i]).epsilon(1e-9));
}
