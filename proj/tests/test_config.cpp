#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sepcount/config.hpp"
#include "sepcount/errors.hpp"

using namespace sepcount;
namespace fs = std::filesystem;

TEST_CASE("presets") {
    RunConfig rc;
    rc.apply_preset("paper");
    CHECK(rc.model.f_conv == 256);
    CHECK(rc.model.dilation_exps == 8);
    CHECK(rc.model.repeats == 4);
    rc.apply_preset("toy");
    CHECK(rc.model.f_conv == 64);
    CHECK(rc.model.dilation_exps == 4);
    CHECK(rc.model.repeats == 2);
    // Embedding dimension and center count are preset-independent.
    CHECK(rc.model.embed_dim == 20);
    CHECK(rc.model.n_centers == 4);
    CHECK_THROWS_AS(rc.apply_preset("huge"), ConfigError);
}

TEST_CASE("dilation schedule") {
    ModelConfig cfg = ModelConfig::paper();
    auto d = cfg.dilation_schedule();
    REQUIRE(d.size() == 32);
    CHECK(d[0] == 1);
    CHECK(d[7] == 128);
    CHECK(d[8] == 1);  // schedule repeats
    CHECK(cfg.f_total() == 267);
}

TEST_CASE("set covers every tunable section") {
    RunConfig rc;
    rc.set("model.f_conv", "32");
    CHECK(rc.model.f_conv == 32);
    rc.set("counter.gde_coeff", "0.25");
    CHECK(rc.model.gde_coeff == doctest::Approx(0.25));
    rc.set("counter.rank_threshold", "0.2");
    CHECK(rc.model.rank_threshold == doctest::Approx(0.2));
    rc.set("train.epochs", "7");
    CHECK(rc.train.epochs == 7);
    rc.set("train.lr", "0.01");
    CHECK(rc.train.adam.lr == doctest::Approx(0.01));
    rc.set("train.regime", "two-and-three");
    CHECK(rc.train.regime == "two-and-three");
    rc.set("data.duration", "0.75");
    CHECK(rc.data.duration_s == doctest::Approx(0.75));
    rc.set("seed", "99");
    CHECK(rc.seed == 99);
}

TEST_CASE("unknown keys and bad values are rejected") {
    RunConfig rc;
    CHECK_THROWS_AS(rc.set("model.bogus", "1"), ConfigError);
    CHECK_THROWS_AS(rc.set("nosuchsection.x", "1"), ConfigError);
    CHECK_THROWS_AS(rc.set("train.epochs", "many"), ConfigError);
}

TEST_CASE("config file parsing") {
    const fs::path p = fs::temp_directory_path() / "sep_cfg_test.cfg";
    {
        std::ofstream out(p);
        out << "# comment line\n"
            << "seed = 42\n"
            << "[model]\n"
            << "f_conv = 16\n"
            << "\n"
            << "[train]\n"
            << "epochs = 3   # trailing comment\n";
    }
    RunConfig rc;
    rc.load_file(p);
    CHECK(rc.seed == 42);
    CHECK(rc.model.f_conv == 16);
    CHECK(rc.train.epochs == 3);
    fs::remove(p);

    CHECK_THROWS_AS(rc.load_file("/nonexistent/x.cfg"), IoError);
}

TEST_CASE("count mode parsing") {
    CHECK(count_mode_from_string("oracle") == CountMode::kOracle);
    CHECK(count_mode_from_string("gde") == CountMode::kGde);
    CHECK(count_mode_from_string("rank") == CountMode::kRank);
    CHECK_THROWS_AS(count_mode_from_string("guess"), ConfigError);
    CHECK(to_string(CountMode::kGde) == "gde");
}
