#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sepcount/config.hpp"
#include "sepcount/counter.hpp"
#include "sepcount/data.hpp"
#include "sepcount/errors.hpp"
#include "sepcount/metrics.hpp"
#include "sepcount/model.hpp"
#include "sepcount/selfcheck.hpp"
#include "sepcount/trainer.hpp"

namespace fs = std::filesystem;
using namespace sepcount;

namespace {

// One exit code per error category so scripts can tell failures apart.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;
constexpr int kExitNumeric = 5;
constexpr int kExitShape = 6;
constexpr int kExitCheckFailed = 7;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Config file ([section] key=value)");
    cmd->add_option("--preset", opts.preset, "Model/dataset preset")
        ->check(CLI::IsMember({"paper", "toy"}));
    cmd->add_option("--seed", opts.seed, "Root seed; all randomness derives from it");
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig rc;
    if (!opts.config_path.empty()) rc.load_file(opts.config_path);
    if (!opts.preset.empty()) rc.apply_preset(opts.preset);
    if (opts.seed) rc.set("seed", std::to_string(*opts.seed));
    return rc;
}

Checkpoint load_model(const std::string& path) {
    if (path.empty()) throw ConfigError("--checkpoint is required for this command");
    return load_checkpoint(path);
}

void print_results(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        std::printf("%-18s %s  %s\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                    r.detail.c_str());
}

int cmd_generate(const CommonOpts& common, const std::string& out) {
    RunConfig rc = resolve_config(common);
    if (!out.empty()) rc.data.out_dir = out;
    if (rc.data.out_dir.empty()) rc.data.out_dir = "data";
    Manifest manifest = build_dataset(rc.data);
    std::printf("wrote %zu mixtures under %s\n", manifest.size(),
                rc.data.out_dir.string().c_str());
    return kExitOk;
}

int cmd_train(const CommonOpts& common, const std::string& data_dir, const std::string& out,
              std::optional<std::size_t> epochs) {
    RunConfig rc = resolve_config(common);
    if (epochs) rc.train.epochs = *epochs;
    const fs::path dir = data_dir.empty() ? fs::path("data") : fs::path(data_dir);
    Manifest manifest = manifest_read(dir / "manifest.jsonl");
    SeparationModel model;
    model.init(rc.model, rc.seed);
    TrainConfig tc = rc.train;
    tc.seed = rc.seed;
    TrainResult result =
        train(model, tc, manifest, dir, out.empty() ? "runs" : fs::path(out), &std::cout);
    std::printf("final checkpoint: %s\n", result.final_checkpoint.string().c_str());
    std::printf("best checkpoint:  %s\n", result.best_checkpoint.string().c_str());
    return kExitOk;
}

int cmd_count(const std::string& checkpoint, const std::string& input) {
    Checkpoint ckpt = load_model(checkpoint);
    Waveform x = wav_read(input);
    Tensor v = ckpt.model.embeddings(x);
    GdeResult gde = gde_count_auto(v, ckpt.model.cfg.gde_coeff);
    const std::size_t rank = rank_count(v, ckpt.model.cfg.rank_threshold);

    std::printf("estimated speakers (GDE):  %zu%s\n", gde.estimate,
                gde.saturated ? "  [warning: no GDE sign change; estimate saturated]" : "");
    std::printf("rank baseline estimate:    %zu\n", rank);
    std::printf("GDE factor:                %.6f\n", gde.factor);
    std::printf("%-5s %-14s %-14s %-14s\n", "k", "eigenvalue", "radius", "gde");
    for (std::size_t k = 0; k < gde.gde.size(); ++k)
        std::printf("%-5zu %-14.6e %-14.6e %-14.6e\n", k + 1, gde.eigenvalues[k],
                    gde.radii[k], gde.gde[k]);
    return kExitOk;
}

int cmd_separate(const std::string& checkpoint, const std::string& input,
                 std::optional<std::size_t> num_speakers, const std::string& mode_name,
                 const std::string& out) {
    Checkpoint ckpt = load_model(checkpoint);
    Waveform x = wav_read(input);
    const CountMode mode =
        num_speakers ? CountMode::kOracle : count_mode_from_string(mode_name);
    SeparateResult result = ckpt.model.separate(x, num_speakers, mode);
    if (result.saturation_warning)
        std::fprintf(stderr, "warning: GDE had no sign change; count saturated\n");

    const fs::path in_path(input);
    const fs::path dir = out.empty() ? in_path.parent_path() : fs::path(out);
    if (!dir.empty()) fs::create_directories(dir);
    const std::string stem = in_path.stem().string();
    for (std::size_t i = 0; i < result.estimates.size(); ++i) {
        fs::path p = dir / (stem + "_src" + std::to_string(i + 1) + ".wav");
        wav_write(p, result.estimates[i]);
        std::printf("%s\n", p.string().c_str());
    }
    std::printf("speakers: %zu (%s)\n", result.estimated_c,
                num_speakers ? "forced" : to_string(mode).c_str());
    return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_dir,
                 const std::string& split, const std::string& mode_name,
                 const std::string& out) {
    Checkpoint ckpt = load_model(checkpoint);
    const fs::path dir = data_dir.empty() ? fs::path("data") : fs::path(data_dir);
    Manifest manifest = manifest_read(dir / "manifest.jsonl");
    std::vector<MixtureRecord> records = manifest_split(manifest, split);
    const CountMode mode = count_mode_from_string(mode_name);

    std::vector<EvalRecord> evals = evaluate(ckpt.model, records, dir, mode);
    std::printf("%s", eval_report_text(evals).c_str());
    BenchmarkResult counts = counting_comparison(ckpt.model, records, dir);
    std::printf("%s", benchmark_table_text(counts).c_str());

    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream csv(fs::path(out) / "evaluation.csv");
        csv << eval_report_csv(evals);
        std::ofstream counts_csv(fs::path(out) / "counting.csv");
        counts_csv << benchmark_table_csv(counts);
        std::printf("reports written under %s\n", out.c_str());
    }
    return kExitOk;
}

int cmd_selfcheck(std::uint64_t seed) {
    std::vector<CheckResult> results = cola_suite(seed);
    std::vector<CheckResult> grads = gradient_suite(seed);
    results.insert(results.end(), grads.begin(), grads.end());
    print_results(results);
    if (!all_passed(results)) {
        std::fprintf(stderr, "selfcheck: FAILED\n");
        return kExitCheckFailed;
    }
    std::printf("selfcheck: all checks passed\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monaural multi-speaker separation with source counting"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string checkpoint, input, out, data_dir;
    std::string count_mode = "gde";
    std::string split = "test";
    std::optional<std::size_t> num_speakers, epochs;

    CLI::App* gen = app.add_subcommand("generate", "Synthesize a mixture dataset");
    add_common(gen, common);
    gen->add_option("--out", out, "Output directory (created if missing)");

    CLI::App* train_cmd = app.add_subcommand("train", "Train a separation model");
    add_common(train_cmd, common);
    train_cmd->add_option("--data", data_dir, "Dataset directory with manifest.jsonl");
    train_cmd->add_option("--out", out, "Run directory for checkpoints and curves");
    train_cmd->add_option("--epochs", epochs, "Override epoch count");

    CLI::App* count_cmd = app.add_subcommand("count", "Estimate the speaker count of a WAV");
    count_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    count_cmd->add_option("input", input, "Input mixture WAV")->required();

    CLI::App* sep = app.add_subcommand("separate", "Separate a mixture into source WAVs");
    sep->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    sep->add_option("input", input, "Input mixture WAV")->required();
    sep->add_option("--num-speakers", num_speakers, "Bypass counting with a known C");
    sep->add_option("--count-mode", count_mode, "Counting method")
        ->check(CLI::IsMember({"oracle", "gde", "rank"}));
    sep->add_option("--out", out, "Directory for the separated WAVs");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Metrics over a manifest split");
    eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    eval_cmd->add_option("--data", data_dir, "Dataset directory with manifest.jsonl");
    eval_cmd->add_option("--split", split, "Manifest split to score");
    eval_cmd->add_option("--count-mode", count_mode, "Counting method")
        ->check(CLI::IsMember({"oracle", "gde", "rank"}));
    eval_cmd->add_option("--out", out, "Directory for CSV reports");

    CLI::App* check = app.add_subcommand("selfcheck", "Run COLA and gradient suites");
    std::uint64_t check_seed = 1;
    check->add_option("--seed", check_seed, "Suite seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) return cmd_generate(common, out);
        if (train_cmd->parsed()) return cmd_train(common, data_dir, out, epochs);
        if (count_cmd->parsed()) return cmd_count(checkpoint, input);
        if (sep->parsed()) return cmd_separate(checkpoint, input, num_speakers, count_mode, out);
        if (eval_cmd->parsed()) return cmd_evaluate(checkpoint, data_dir, split, count_mode, out);
        if (check->parsed()) return cmd_selfcheck(check_seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitFormat;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "shape error: %s\n", e.what());
        return kExitShape;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
