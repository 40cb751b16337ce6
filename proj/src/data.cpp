#include "sepcount/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

namespace sepcount {

namespace {

using json = nlohmann::json;

void write_u32(std::ostream& os, std::uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(buf, 4);
}

void write_u16(std::ostream& os, std::uint16_t v) {
    char buf[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(buf, 2);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw FormatError("wav: truncated file");
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

std::uint16_t read_u16(std::istream& is) {
    unsigned char buf[2];
    is.read(reinterpret_cast<char*>(buf), 2);
    if (!is) throw FormatError("wav: truncated file");
    return static_cast<std::uint16_t>(buf[0] | (buf[1] << 8));
}

}  // namespace

Waveform wav_read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("wav: cannot open '" + path.string() + "'");

    char tag[4];
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "RIFF", 4) != 0) {
        throw FormatError("wav: missing RIFF header in '" + path.string() + "'");
    }
    read_u32(is);  // riff size
    is.read(tag, 4);
    if (!is || std::memcmp(tag, "WAVE", 4) != 0) {
        throw FormatError("wav: missing WAVE tag in '" + path.string() + "'");
    }

    bool have_fmt = false;
    std::vector<std::int16_t> samples;
    while (is.read(tag, 4)) {
        const std::uint32_t chunk_size = read_u32(is);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            const std::uint16_t format = read_u16(is);
            const std::uint16_t channels = read_u16(is);
            const std::uint32_t rate = read_u32(is);
            read_u32(is);  // byte rate
            read_u16(is);  // block align
            const std::uint16_t bits = read_u16(is);
            if (format != 1) throw FormatError("wav: format field must be PCM (1), got " + std::to_string(format));
            if (channels != 1) throw FormatError("wav: channel count must be 1, got " + std::to_string(channels));
            if (rate != kSampleRate) {
                throw FormatError("wav: sample_rate must be 8000, got " + std::to_string(rate));
            }
            if (bits != 16) throw FormatError("wav: bit depth must be 16, got " + std::to_string(bits));
            if (chunk_size > 16) is.ignore(chunk_size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
            samples.resize(chunk_size / 2);
            is.read(reinterpret_cast<char*>(samples.data()),
                    static_cast<std::streamsize>(samples.size() * 2));
            if (!is) throw FormatError("wav: truncated data chunk in '" + path.string() + "'");
            break;
        } else {
            is.ignore(chunk_size + (chunk_size % 2));
        }
    }
    if (!have_fmt || samples.empty()) {
        throw FormatError("wav: no PCM data found in '" + path.string() + "'");
    }
    Waveform w(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        w[i] = static_cast<double>(samples[i]) / 32768.0;
    }
    return w;
}

void wav_write(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("wav: cannot open '" + path.string() + "' for writing");
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.size() * 2);
    os.write("RIFF", 4);
    write_u32(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    write_u32(os, 16);
    write_u16(os, 1);                    // PCM
    write_u16(os, 1);                    // mono
    write_u32(os, kSampleRate);
    write_u32(os, kSampleRate * 2);      // byte rate
    write_u16(os, 2);                    // block align
    write_u16(os, 16);                   // bits
    os.write("data", 4);
    write_u32(os, data_bytes);
    for (double v : w) {
        const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
        write_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    if (!os) throw IoError("wav: write failed for '" + path.string() + "'");
}

SpeakerProfile SpeakerProfile::make(std::uint64_t seed, std::uint32_t id) {
    Rng rng = make_rng(seed, "speaker-" + std::to_string(id));
    SpeakerProfile p;
    p.id = id;
    // Stratify the fundamental by speaker id (low-discrepancy spacing) so any
    // two speakers land on well-separated pitches; the seed only jitters the
    // exact value inside the speaker's own slot.
    constexpr double kGolden = 0.618033988749895;
    const double slot = std::fmod(static_cast<double>(id) * kGolden, 1.0);
    const double t = 0.9 * slot + 0.1 * uniform(rng, 0.0, 1.0);
    const double base = 90.0 * std::pow(250.0 / 90.0, t);
    p.f0_lo = base * 0.97;
    p.f0_hi = base * 1.03;
    const double decay = uniform(rng, 0.5, 0.95);
    p.harmonic_env.resize(10);
    double amp = 1.0;
    for (double& h : p.harmonic_env) {
        h = amp * uniform(rng, 0.6, 1.0);
        amp *= decay;
    }
    p.shaping_fir.resize(8);
    double norm = 0.0;
    for (double& c : p.shaping_fir) {
        c = gaussian(rng);
        norm += c * c;
    }
    norm = std::sqrt(norm);
    for (double& c : p.shaping_fir) c /= norm;
    p.am_rate_hz = uniform(rng, 2.0, 8.0);
    return p;
}

Waveform synth_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t seed) {
    if (duration_s < 0.5 || duration_s > 10.0) {
        throw ConfigError("synth_utterance: duration must be in [0.5, 10] s");
    }
    Rng rng = make_rng(seed, "utt-" + std::to_string(profile.id));
    const std::size_t len = static_cast<std::size_t>(duration_s * kSampleRate);
    Waveform raw(len, 0.0);

    const double dt = 1.0 / static_cast<double>(kSampleRate);
    std::size_t pos = 0;
    bool voiced = true;  // always start voiced so the signal is never all-noise
    double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    while (pos < len) {
        const std::size_t seg = std::min<std::size_t>(
            len - pos, static_cast<std::size_t>(uniform(rng, 0.08, 0.24) * kSampleRate));
        if (voiced) {
            const double f0 = uniform(rng, profile.f0_lo, profile.f0_hi);
            for (std::size_t i = 0; i < seg; ++i) {
                double s = 0.0;
                for (std::size_t h = 0; h < profile.harmonic_env.size(); ++h) {
                    const double freq = f0 * static_cast<double>(h + 1);
                    if (freq >= kSampleRate / 2.0) break;
                    s += profile.harmonic_env[h] * std::sin(phase * static_cast<double>(h + 1));
                }
                raw[pos + i] = s;
                phase += 2.0 * std::numbers::pi * f0 * dt;
            }
        } else {
            for (std::size_t i = 0; i < seg; ++i) raw[pos + i] = 0.06 * gaussian(rng);
        }
        pos += seg;
        voiced = !voiced;
    }

    // Spectral shaping FIR.
    Waveform shaped(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < profile.shaping_fir.size() && k <= i; ++k) {
            acc += profile.shaping_fir[k] * raw[i - k];
        }
        shaped[i] = acc;
    }
    // Amplitude modulation.
    const double am_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) * dt;
        shaped[i] *= 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * profile.am_rate_hz * t + am_phase);
    }
    double peak = 0.0;
    for (double v : shaped) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw NumericError("synth_utterance: generated silence");
    for (double& v : shaped) v *= 0.9 / peak;
    return shaped;
}

MixResult mix_at_snr(const std::vector<Waveform>& sources, const std::vector<double>& levels_db) {
    if (sources.size() < 2) throw ConfigError("mix_at_snr: need at least two sources");
    if (levels_db.size() != sources.size() - 1) {
        throw ConfigError("mix_at_snr: expected " + std::to_string(sources.size() - 1) +
                          " relative levels");
    }
    std::size_t len = sources.front().size();
    for (const Waveform& s : sources) len = std::min(len, s.size());
    if (len == 0) throw ShapeError("mix_at_snr: empty source");

    std::vector<double> power(sources.size(), 0.0);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        for (std::size_t j = 0; j < len; ++j) power[i] += sources[i][j] * sources[i][j];
        if (power[i] == 0.0) throw NumericError("mix_at_snr: zero-power source " + std::to_string(i));
    }

    MixResult result;
    result.gains.assign(sources.size(), 1.0);
    for (std::size_t i = 1; i < sources.size(); ++i) {
        // 10·log10(P1 / P_i·g²) == level  =>  g = sqrt(P1 / (P_i·10^(level/10)))
        result.gains[i] = std::sqrt(power[0] / (power[i] * std::pow(10.0, levels_db[i - 1] / 10.0)));
    }
    result.mixture.assign(len, 0.0);
    result.scaled_sources.resize(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        result.scaled_sources[i].resize(len);
        for (std::size_t j = 0; j < len; ++j) {
            result.scaled_sources[i][j] = result.gains[i] * sources[i][j];
            result.mixture[j] += result.scaled_sources[i][j];
        }
    }
    double peak = 0.0;
    for (double v : result.mixture) peak = std::max(peak, std::abs(v));
    if (peak > 1.0) {
        const double rescale = 1.0 / peak;
        for (double& g : result.gains) g *= rescale;
        for (double& v : result.mixture) v *= rescale;
        for (Waveform& s : result.scaled_sources) {
            for (double& v : s) v *= rescale;
        }
    }
    return result;
}

namespace {

MixtureRecord make_record(const DatasetConfig& config, const std::string& split,
                          std::size_t c, std::size_t index,
                          const std::vector<std::uint32_t>& speaker_pool, Rng& rng) {
    // Pick C distinct speakers from the split's pool.
    std::vector<std::uint32_t> pool = speaker_pool;
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < c; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t j = pick(rng);
        ids.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    std::vector<Waveform> sources;
    for (std::uint32_t id : ids) {
        const SpeakerProfile profile = SpeakerProfile::make(config.seed, id);
        sources.push_back(synth_utterance(profile, config.duration_s, rng()));
    }
    std::vector<double> levels;
    for (std::size_t i = 1; i < c; ++i) {
        levels.push_back(uniform(rng, config.level_lo_db, config.level_hi_db));
    }
    const MixResult mix = mix_at_snr(sources, levels);

    const std::string stem = split + "_c" + std::to_string(c) + "_" + std::to_string(index);
    MixtureRecord rec;
    rec.split = split;
    rec.c = c;
    rec.gains = mix.gains;
    rec.speaker_ids = ids;
    rec.mixture_path = stem + "_mix.wav";
    wav_write(config.out_dir / rec.mixture_path, mix.mixture);
    for (std::size_t i = 0; i < c; ++i) {
        const std::string sp = stem + "_src" + std::to_string(i) + ".wav";
        rec.source_paths.push_back(sp);
        wav_write(config.out_dir / sp, mix.scaled_sources[i]);
    }
    return rec;
}

}  // namespace

Manifest build_dataset(const DatasetConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("build_dataset: cannot create '" + config.out_dir.string() + "'");
    for (std::size_t c : config.c_values) {
        if (c < 2 || c > 4) {
            throw ConfigError("build_dataset: speaker count " + std::to_string(c) +
                              " outside supported range [2, 4]");
        }
    }

    // Disjoint speaker pools: train/valid share one pool, test uses another.
    std::vector<std::uint32_t> train_pool, test_pool;
    for (std::uint32_t i = 0; i < 20; ++i) train_pool.push_back(i);
    for (std::uint32_t i = 100; i < 120; ++i) test_pool.push_back(i);

    Manifest manifest;
    const struct {
        const char* name;
        std::size_t count;
        const std::vector<std::uint32_t>* pool;
    } splits[] = {{"train", config.train_per_c, &train_pool},
                  {"valid", config.valid_per_c, &train_pool},
                  {"test", config.test_per_c, &test_pool}};
    for (const auto& split : splits) {
        Rng rng = make_rng(config.seed, std::string("data-") + split.name);
        for (std::size_t c : config.c_values) {
            for (std::size_t i = 0; i < split.count; ++i) {
                manifest.push_back(make_record(config, split.name, c, i, *split.pool, rng));
            }
        }
    }
    manifest_write(config.out_dir / "manifest.jsonl", manifest);
    return manifest;
}

void manifest_write(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream os(path);
    if (!os) throw IoError("manifest: cannot open '" + path.string() + "' for writing");
    for (const MixtureRecord& r : manifest) {
        json j;
        j["mixture"] = r.mixture_path;
        j["sources"] = r.source_paths;
        j["c"] = r.c;
        j["gains"] = r.gains;
        j["speakers"] = r.speaker_ids;
        j["split"] = r.split;
        os << j.dump() << "\n";
    }
}

Manifest manifest_read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open '" + path.string() + "'");
    Manifest manifest;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("manifest: bad record at line " +
                              std::to_string(manifest.size() + 1) + ": " + e.what());
        }
        MixtureRecord r;
        r.mixture_path = j.at("mixture").get<std::string>();
        r.source_paths = j.at("sources").get<std::vector<std::string>>();
        r.c = j.at("c").get<std::size_t>();
        r.gains = j.at("gains").get<std::vector<double>>();
        r.speaker_ids = j.at("speakers").get<std::vector<std::uint32_t>>();
        r.split = j.at("split").get<std::string>();
        manifest.push_back(std::move(r));
    }
    return manifest;
}

std::vector<MixtureRecord> manifest_split(const Manifest& manifest, const std::string& split) {
    std::vector<MixtureRecord> out;
    for (const MixtureRecord& r : manifest) {
        if (r.split == split) out.push_back(r);
    }
    return out;
}

}  // namespace sepcount
