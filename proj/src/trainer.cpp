#include "sepcount/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sepcount {

std::vector<std::size_t> TrainConfig::regime_c_values() const {
    if (regime == "two") return {2};
    if (regime == "three") return {3};
    if (regime == "two-and-three") return {2, 3};
    throw ConfigError("unknown training regime '" + regime +
                      "' (expected two, three, or two-and-three)");
}

std::string TrainConfig::echo() const {
    std::ostringstream os;
    os << "epochs=" << epochs << " batch_size=" << batch_size << " lr=" << adam.lr
       << " beta1=" << adam.beta1 << " beta2=" << adam.beta2 << " eps=" << adam.eps
       << " clip_norm=" << clip_norm << " regime=" << regime << " seed=" << seed;
    return os.str();
}

// ---------------------------------------------------------------------------
// Checkpoint serialization: little-endian binary, magic bytes, version,
// length-prefixed fields. Doubles round-trip bitwise.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'E', 'P', 'C'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("checkpoint: truncated file");
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    const auto len = read_pod<std::uint64_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw FormatError("checkpoint: truncated string field");
    return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_pod<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is) {
    const auto rank = read_pod<std::uint32_t>(is);
    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i) shape[i] = read_pod<std::uint64_t>(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw FormatError("checkpoint: truncated tensor data");
    return t;
}

void write_model_config(std::ostream& os, const ModelConfig& cfg) {
    write_pod<std::uint64_t>(os, cfg.f_conv);
    write_pod<std::uint64_t>(os, cfg.se_reduction);
    write_pod<std::uint64_t>(os, cfg.sep_width);
    write_pod<std::uint64_t>(os, cfg.dilation_exps);
    write_pod<std::uint64_t>(os, cfg.repeats);
    write_pod<std::uint64_t>(os, cfg.embed_dim);
    write_pod<std::uint64_t>(os, cfg.n_centers);
    write_pod<std::uint64_t>(os, cfg.kmeans_iters);
    write_pod<double>(os, cfg.gde_coeff);
    write_pod<double>(os, cfg.rank_threshold);
}

ModelConfig read_model_config(std::istream& is) {
    ModelConfig cfg;
    cfg.f_conv = read_pod<std::uint64_t>(is);
    cfg.se_reduction = read_pod<std::uint64_t>(is);
    cfg.sep_width = read_pod<std::uint64_t>(is);
    cfg.dilation_exps = read_pod<std::uint64_t>(is);
    cfg.repeats = read_pod<std::uint64_t>(is);
    cfg.embed_dim = read_pod<std::uint64_t>(is);
    cfg.n_centers = read_pod<std::uint64_t>(is);
    cfg.kmeans_iters = read_pod<std::uint64_t>(is);
    cfg.gde_coeff = read_pod<double>(is);
    cfg.rank_threshold = read_pod<double>(is);
    return cfg;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, ckpt.version);
    write_model_config(os, ckpt.model_config);
    write_string(os, ckpt.config_echo);
    write_pod<std::uint64_t>(os, ckpt.epoch);
    write_string(os, ckpt.rng_state);

    const std::vector<ParamRef> params = ckpt.model.params();
    write_pod<std::uint64_t>(os, params.size());
    for (const ParamRef& p : params) {
        write_string(os, p.name);
        write_tensor(os, *p.value);
    }

    const bool has_adam = !ckpt.adam.m.empty();
    write_pod<std::uint8_t>(os, has_adam ? 1 : 0);
    if (has_adam) {
        write_pod<double>(os, ckpt.adam.cfg.lr);
        write_pod<double>(os, ckpt.adam.cfg.beta1);
        write_pod<double>(os, ckpt.adam.cfg.beta2);
        write_pod<double>(os, ckpt.adam.cfg.eps);
        write_pod<std::uint64_t>(os, ckpt.adam.step);
        for (std::size_t i = 0; i < params.size(); ++i) {
            write_tensor(os, ckpt.adam.m[i]);
            write_tensor(os, ckpt.adam.v[i]);
        }
    }
    if (!os) throw IoError("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path.string() + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic bytes in '" + path.string() + "'");
    }
    Checkpoint ckpt;
    ckpt.version = read_pod<std::uint32_t>(is);
    if (ckpt.version != 1) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(ckpt.version));
    }
    ckpt.model_config = read_model_config(is);
    ckpt.config_echo = read_string(is);
    ckpt.epoch = read_pod<std::uint64_t>(is);
    ckpt.rng_state = read_string(is);

    ckpt.model.init(ckpt.model_config, 0);
    std::vector<ParamRef> params = ckpt.model.params();
    const auto count = read_pod<std::uint64_t>(is);
    if (count != params.size()) {
        throw FormatError("checkpoint: parameter count " + std::to_string(count) +
                          " does not match model (" + std::to_string(params.size()) + ")");
    }
    for (ParamRef& p : params) {
        const std::string name = read_string(is);
        if (name != p.name) {
            throw FormatError("checkpoint: parameter '" + name + "' where '" + p.name +
                              "' was expected");
        }
        Tensor t = read_tensor(is);
        if (!t.same_shape(*p.value)) {
            throw FormatError("checkpoint: shape mismatch for parameter '" + name + "'");
        }
        *p.value = std::move(t);
    }
    const auto has_adam = read_pod<std::uint8_t>(is);
    if (has_adam) {
        ckpt.adam.cfg.lr = read_pod<double>(is);
        ckpt.adam.cfg.beta1 = read_pod<double>(is);
        ckpt.adam.cfg.beta2 = read_pod<double>(is);
        ckpt.adam.cfg.eps = read_pod<double>(is);
        ckpt.adam.step = read_pod<std::uint64_t>(is);
        ckpt.adam.m.clear();
        ckpt.adam.v.clear();
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.adam.m.push_back(read_tensor(is));
            ckpt.adam.v.push_back(read_tensor(is));
        }
    }
    return ckpt;
}

// ---------------------------------------------------------------------------

namespace {

struct LoadedRecord {
    Waveform mixture;
    std::vector<Waveform> sources;
};

LoadedRecord load_record(const MixtureRecord& rec, const std::filesystem::path& dir) {
    LoadedRecord out;
    out.mixture = wav_read(dir / rec.mixture_path);
    for (const std::string& p : rec.source_paths) out.sources.push_back(wav_read(dir / p));
    return out;
}

void crop_to(LoadedRecord& rec, std::size_t len) {
    rec.mixture.resize(len);
    for (Waveform& s : rec.sources) s.resize(len);
}

double run_split_loss(SeparationModel& model, const std::vector<LoadedRecord>& records) {
    double total = 0.0;
    for (const LoadedRecord& rec : records) {
        SeparationModel::ForwardCache cache;
        const std::vector<Waveform> est = model.forward(rec.mixture, rec.sources.size(), cache);
        total += pit_loss(rec.sources, est).loss;
    }
    return total / static_cast<double>(records.size());
}

}  // namespace

TrainResult train(SeparationModel& model, const TrainConfig& config, const Manifest& manifest,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                  std::ostream* log) {
    const std::vector<std::size_t> c_values = config.regime_c_values();
    auto in_regime = [&](const MixtureRecord& r) {
        return std::find(c_values.begin(), c_values.end(), r.c) != c_values.end();
    };

    std::vector<LoadedRecord> train_set, valid_set;
    for (const MixtureRecord& r : manifest) {
        if (!in_regime(r)) continue;
        if (r.split == "train") train_set.push_back(load_record(r, data_dir));
        else if (r.split == "valid") valid_set.push_back(load_record(r, data_dir));
    }
    if (train_set.empty()) {
        throw ConfigError("train: no training records match regime '" + config.regime + "'");
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("train: cannot create '" + out_dir.string() + "'");

    std::vector<ParamRef> params = model.params();
    AdamState adam;
    adam.cfg = config.adam;
    adam.init(params);

    Rng shuffle_rng = make_rng(config.seed, "shuffle");
    TrainResult result;
    result.best_checkpoint = out_dir / "best.ckpt";
    result.final_checkpoint = out_dir / "final.ckpt";
    double best_valid = std::numeric_limits<double>::infinity();

    auto save = [&](const std::filesystem::path& path, std::uint64_t epoch) {
        Checkpoint ckpt;
        ckpt.model_config = model.cfg;
        ckpt.config_echo = config.echo();
        ckpt.epoch = epoch;
        std::ostringstream rs;
        rs << shuffle_rng;
        ckpt.rng_state = rs.str();
        ckpt.model = model;
        ckpt.adam = adam;
        save_checkpoint(path, ckpt);
    };

    if (config.epochs == 0) {
        save(result.best_checkpoint, 0);
        save(result.final_checkpoint, 0);
        return result;
    }

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            // Crop every utterance in the batch to the shortest one.
            std::size_t len = std::numeric_limits<std::size_t>::max();
            for (std::size_t i = start; i < end; ++i) {
                len = std::min(len, train_set[order[i]].mixture.size());
            }
            model.zero_grads();
            double batch_loss = 0.0;
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                LoadedRecord rec = train_set[order[i]];
                crop_to(rec, len);
                SeparationModel::ForwardCache cache;
                const std::vector<Waveform> est =
                    model.forward(rec.mixture, rec.sources.size(), cache);
                LossReport report;
                std::vector<std::vector<double>> grads = pit_loss_grad(rec.sources, est, &report);
                if (!std::isfinite(report.loss)) {
                    throw NumericError("train: diverged (non-finite loss) at epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(batches));
                }
                batch_loss += report.loss * inv_batch;
                for (auto& g : grads) {
                    for (double& v : g) v *= inv_batch;
                }
                model.backward(cache, grads);
            }
            clip_gradients(params, config.clip_norm);
            adam.update(params);
            epoch_loss += batch_loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        result.train_loss.push_back(epoch_loss);

        const double valid_loss =
            valid_set.empty() ? epoch_loss : run_split_loss(model, valid_set);
        result.valid_loss.push_back(valid_loss);
        if (log) {
            (*log) << "epoch " << epoch << " train_loss " << epoch_loss << " valid_loss "
                   << valid_loss << "\n";
        }
        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            save(result.best_checkpoint, epoch + 1);
        }
        if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
            save(out_dir / ("epoch" + std::to_string(epoch + 1) + ".ckpt"), epoch + 1);
        }
    }
    save(result.final_checkpoint, config.epochs);

    std::ofstream curve(out_dir / "loss_curve.csv");
    curve << "epoch,train_loss,valid_loss\n";
    for (std::size_t i = 0; i < result.train_loss.size(); ++i) {
        curve << i + 1 << "," << result.train_loss[i] << "," << result.valid_loss[i] << "\n";
    }
    return result;
}

std::vector<EvalRecord> evaluate(const SeparationModel& model,
                                 const std::vector<MixtureRecord>& records,
                                 const std::filesystem::path& data_dir, CountMode mode) {
    if (records.empty()) {
        throw ConfigError("evaluate: empty split, nothing to report");
    }
    std::vector<EvalRecord> out;
    for (const MixtureRecord& rec : records) {
        const LoadedRecord loaded = load_record(rec, data_dir);
        SeparateResult sep;
        if (mode == CountMode::kOracle) {
            sep = model.separate(loaded.mixture, rec.c);
        } else {
            sep = model.separate(loaded.mixture, std::nullopt, mode);
        }
        EvalRecord er = evaluate_separation(rec.mixture_path, loaded.sources, sep.estimates,
                                            loaded.mixture);
        er.estimated_c = sep.estimated_c;
        er.count_mismatch = sep.estimated_c != rec.c;
        out.push_back(std::move(er));
    }
    return out;
}

BenchmarkResult counting_comparison(const SeparationModel& model,
                                    const std::vector<MixtureRecord>& records,
                                    const std::filesystem::path& data_dir) {
    if (records.empty()) {
        throw ConfigError("counting_comparison: empty split, nothing to report");
    }
    std::map<std::size_t, std::array<std::size_t, 3>> per_c;  // C -> (gde ok, rank ok, total)
    for (const MixtureRecord& rec : records) {
        const Waveform mixture = wav_read(data_dir / rec.mixture_path);
        const Tensor v = model.embeddings(mixture);
        auto& stats = per_c[rec.c];
        if (gde_count_auto(v, model.cfg.gde_coeff).estimate == rec.c) ++stats[0];
        if (rank_count(v, model.cfg.rank_threshold) == rec.c) ++stats[1];
        ++stats[2];
    }
    BenchmarkResult result;
    MethodAccuracy gde{"gde", {}, 0.0}, rank{"rank", {}, 0.0};
    for (const auto& [c, stats] : per_c) {
        result.c_values.push_back(c);
        gde.per_c.push_back(100.0 * static_cast<double>(stats[0]) / static_cast<double>(stats[2]));
        rank.per_c.push_back(100.0 * static_cast<double>(stats[1]) / static_cast<double>(stats[2]));
    }
    for (MethodAccuracy* m : {&gde, &rank}) {
        double sum = 0.0;
        for (double a : m->per_c) sum += a;
        m->average = sum / static_cast<double>(m->per_c.size());
    }
    result.methods = {gde, rank};
    return result;
}

}  // namespace sepcount
