#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sepcount/data.hpp"
#include "sepcount/model.hpp"
#include "sepcount/trainer.hpp"

namespace sepcount {

// All tunables in one place, addressable as "<section>.<key>" from a config
// file ([section] headers, key=value lines, # comments). Unknown keys are
// rejected.
struct RunConfig {
    std::string preset = "toy";  // toy | paper
    ModelConfig model = ModelConfig::toy();
    TrainConfig train;
    DatasetConfig data;
    std::uint64_t seed = 1;

    void apply_preset(const std::string& name);
    // Applies one "<section>.<key>" = value pair; throws ConfigError on
    // unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    void load_file(const std::filesystem::path& path);
};

}  // namespace sepcount
