#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "sepcount/data.hpp"
#include "sepcount/metrics.hpp"
#include "sepcount/model.hpp"

namespace sepcount {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 4;
    AdamConfig adam;
    double clip_norm = 5.0;
    std::string regime = "two";  // two | three | two-and-three
    std::uint64_t seed = 1;
    std::size_t checkpoint_every = 0;  // 0: best + final only

    // Which true speaker counts this regime trains on.
    std::vector<std::size_t> regime_c_values() const;
    std::string echo() const;
};

struct Checkpoint {
    std::uint32_t version = 1;
    ModelConfig model_config;
    std::string config_echo;
    std::uint64_t epoch = 0;
    std::string rng_state;
    SeparationModel model;
    AdamState adam;
};

void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> valid_loss;
    std::filesystem::path best_checkpoint;
    std::filesystem::path final_checkpoint;
};

// End-to-end training: seeded shuffle, PIT loss with known C, gradient
// clipping, Adam. Persists the best-validation checkpoint (training loss
// stands in when the manifest has no valid split) and a loss-curve CSV.
TrainResult train(SeparationModel& model, const TrainConfig& config, const Manifest& manifest,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

// Separation metrics over one manifest split.
std::vector<EvalRecord> evaluate(const SeparationModel& model,
                                 const std::vector<MixtureRecord>& records,
                                 const std::filesystem::path& data_dir, CountMode mode);

// GDE vs rank counting over real model embeddings, Table-II-shaped.
BenchmarkResult counting_comparison(const SeparationModel& model,
                                    const std::vector<MixtureRecord>& records,
                                    const std::filesystem::path& data_dir);

}  // namespace sepcount
