#include "sepcount/config.hpp"

#include <fstream>

namespace sepcount {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs a non-negative integer, got '" +
                          value + "'");
    }
}

}  // namespace

void RunConfig::apply_preset(const std::string& name) {
    if (name == "toy") {
        model = ModelConfig::toy();
    } else if (name == "paper") {
        model = ModelConfig::paper();
    } else {
        throw ConfigError("config: unknown preset '" + name + "' (expected toy or paper)");
    }
    preset = name;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    // model
    if (key == "model.preset") apply_preset(value);
    else if (key == "model.f_conv") model.f_conv = parse_uint(key, value);
    else if (key == "model.se_reduction") model.se_reduction = parse_uint(key, value);
    else if (key == "model.sep_width") model.sep_width = parse_uint(key, value);
    else if (key == "model.dilation_exps") model.dilation_exps = parse_uint(key, value);
    else if (key == "model.repeats") model.repeats = parse_uint(key, value);
    else if (key == "model.embed_dim") model.embed_dim = parse_uint(key, value);
    else if (key == "model.centers") model.n_centers = parse_uint(key, value);
    else if (key == "model.kmeans_iters") model.kmeans_iters = parse_uint(key, value);
    // counter
    else if (key == "counter.gde_coeff") model.gde_coeff = parse_double(key, value);
    else if (key == "counter.rank_threshold") model.rank_threshold = parse_double(key, value);
    // train
    else if (key == "train.epochs") train.epochs = parse_uint(key, value);
    else if (key == "train.batch_size") train.batch_size = parse_uint(key, value);
    else if (key == "train.lr") train.adam.lr = parse_double(key, value);
    else if (key == "train.beta1") train.adam.beta1 = parse_double(key, value);
    else if (key == "train.beta2") train.adam.beta2 = parse_double(key, value);
    else if (key == "train.eps") train.adam.eps = parse_double(key, value);
    else if (key == "train.clip_norm") train.clip_norm = parse_double(key, value);
    else if (key == "train.regime") {
        if (value != "two" && value != "three" && value != "two-and-three") {
            throw ConfigError("config: train.regime must be two, three, or two-and-three");
        }
        train.regime = value;
    } else if (key == "train.checkpoint_every") train.checkpoint_every = parse_uint(key, value);
    // data
    else if (key == "data.train_per_c") data.train_per_c = parse_uint(key, value);
    else if (key == "data.valid_per_c") data.valid_per_c = parse_uint(key, value);
    else if (key == "data.test_per_c") data.test_per_c = parse_uint(key, value);
    else if (key == "data.duration") data.duration_s = parse_double(key, value);
    else if (key == "data.level_lo_db") data.level_lo_db = parse_double(key, value);
    else if (key == "data.level_hi_db") data.level_hi_db = parse_double(key, value);
    else if (key == "data.max_speakers") {
        const std::uint64_t c = parse_uint(key, value);
        if (c < 2 || c > model.n_centers) {
            throw ConfigError("config: data.max_speakers=" + value +
                              " outside [2, K=" + std::to_string(model.n_centers) + "]");
        }
        data.c_values.clear();
        for (std::size_t i = 2; i <= c; ++i) data.c_values.push_back(i);
    }
    // seed
    else if (key == "seed") {
        seed = parse_uint(key, value);
        train.seed = seed;
        data.seed = seed;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("config: cannot open '" + path.string() + "'");
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not a key=value pair");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        set(section.empty() ? key : section + "." + key, value);
    }
}

}  // namespace sepcount
