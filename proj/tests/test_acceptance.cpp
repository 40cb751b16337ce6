// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier criteria (end-to-end training) run last.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "sepcount/attractor.hpp"
#include "sepcount/counter.hpp"
#include "sepcount/data.hpp"
#include "sepcount/decoder.hpp"
#include "sepcount/eig.hpp"
#include "sepcount/metrics.hpp"
#include "sepcount/model.hpp"
#include "sepcount/selfcheck.hpp"
#include "sepcount/trainer.hpp"

using namespace sepcount;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %2d (%s): %s — %s\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

double min_pairwise(const Tensor& centers) {
    double best = 1e300;
    for (std::size_t i = 0; i < centers.dim(0); ++i)
        for (std::size_t j = i + 1; j < centers.dim(0); ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < centers.dim(1); ++k) {
                const double diff = centers.at(i, k) - centers.at(j, k);
                d += diff * diff;
            }
            best = std::min(best, std::sqrt(d));
        }
    return best;
}

// --- criterion 1: COLA round trip --------------------------------------

void criterion_cola() {
    const auto t0 = std::chrono::steady_clock::now();
    auto results = cola_suite(1, 100);
    const double secs = seconds_since(t0);
    const bool pass = all_passed(results) && secs < 10.0;
    report(1, "COLA round trip", pass,
           results[0].detail + ", " + std::to_string(secs) + " s");
}

// --- criterion 2: gradient suite ----------------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    auto results = gradient_suite(1, 10);
    const double secs = seconds_since(t0);
    std::string worst;
    for (const auto& r : results)
        if (!r.pass) worst += r.name + " ";
    const bool pass = all_passed(results) && secs < 300.0;
    report(2, "gradient suite", pass,
           (worst.empty() ? std::string("all layers + end-to-end ok")
                          : "failing: " + worst) +
               ", " + std::to_string(secs) + " s");
}

// --- criterion 3: synthetic GDE benchmark --------------------------------

void criterion_gde_benchmark() {
    const auto t0 = std::chrono::steady_clock::now();
    BenchmarkConfig cfg;  // 200 trials per C in {2,3}, N=5000, sigma 0.02..0.1
    cfg.seed = 2024;
    cfg.rank_threshold = calibrate_rank_threshold(0.05, cfg);
    BenchmarkResult r = counting_benchmark(cfg);
    const double gde = r.methods[0].average;
    const double rank = r.methods[1].average;
    const double secs = seconds_since(t0);
    const bool pass = gde >= 95.0 && gde >= rank && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "gde %.1f%% (need >=95), rank %.1f%% at calibrated threshold %.3f, %.1f s",
                  gde, rank, cfg.rank_threshold, secs);
    report(3, "GDE counting benchmark", pass, buf);
    std::printf("%s", benchmark_table_text(r).c_str());
}

// --- criterion 4: attractor oracle equivalence ---------------------------

void criterion_attractor_oracle() {
    bool pass = true;
    std::string detail = "50/50 instances match brute force";
    for (std::uint64_t trial = 0; trial < 50 && pass; ++trial) {
        Rng rng = make_rng(trial, "acc-att");
        const std::size_t n = 40, l = 5, k = 4, c = 2 + trial % 3;
        Tensor v({n, l});
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = gaussian(rng);
        CenterBank bank;
        bank.init(k, l, rng);
        AttractorSet got = select_attractors(v, c, bank, 1);

        double best = -1.0;
        std::vector<std::size_t> best_subset;
        Tensor best_centers;
        for (const auto& subset : subsets_of_size(k, c)) {
            Tensor init({subset.size(), l});
            for (std::size_t i = 0; i < subset.size(); ++i)
                for (std::size_t col = 0; col < l; ++col)
                    init.at(i, col) = bank.centers.at(subset[i], col);
            Tensor refined = kmeans_refine(v, init, 1);
            const double score = min_pairwise(refined);
            if (score > best) {
                best = score;
                best_subset = subset;
                best_centers = refined;
            }
        }
        if (got.subset != best_subset) {
            pass = false;
            detail = "subset mismatch at trial " + std::to_string(trial);
            break;
        }
        for (std::size_t i = 0; i < got.a.size(); ++i)
            if (std::abs(got.a[i] - best_centers[i]) > 1e-9) {
                pass = false;
                detail = "centroid mismatch at trial " + std::to_string(trial);
                break;
            }
    }
    report(4, "attractor oracle equivalence", pass, detail);
}

// --- criterion 5: PIT oracle equivalence ---------------------------------

void criterion_pit_oracle() {
    bool pass = true;
    std::string detail = "50/50 instances, C in {2,3,4}";
    for (int trial = 0; trial < 50 && pass; ++trial) {
        Rng rng = make_rng(static_cast<std::uint64_t>(trial), "acc-pit");
        const std::size_t c = 2 + trial % 3;
        std::vector<Waveform> sources(c, Waveform(64)), est(c, Waveform(64));
        for (auto& s : sources)
            for (auto& v : s) v = gaussian(rng);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < 64; ++j)
                est[i][j] = sources[(i + 2) % c][j] + 0.3 * gaussian(rng);

        LossReport got = pit_loss(sources, est);
        std::vector<std::size_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
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
        if (got.permutation != best_perm || std::abs(got.loss - best) > 1e-12) {
            pass = false;
            detail = "mismatch at trial " + std::to_string(trial);
        }
    }
    report(5, "PIT oracle equivalence", pass, detail);
}

// --- criterion 6: mask simplex -------------------------------------------

void criterion_mask_simplex() {
    ModelConfig cfg = ModelConfig::toy();
    cfg.f_conv = 8;
    cfg.se_reduction = 4;
    cfg.sep_width = 8;
    cfg.dilation_exps = 2;
    cfg.repeats = 1;
    cfg.embed_dim = 6;
    bool pass = true;
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 100 && pass; ++t) {
        Rng rng = make_rng(t, "acc-mask");
        SeparationModel model;
        model.init(cfg, t);
        Waveform x(160);
        for (auto& v : x) v = gaussian(rng) * 0.3;
        const std::size_t c = 2 + t % 3;
        SeparationModel::ForwardCache cache;
        model.forward(x, c, cache);
        for (std::size_t n = 0; n < cache.probs.dim(0); ++n) {
            double s = 0.0;
            for (std::size_t j = 0; j < cache.probs.dim(1); ++j) {
                if (cache.probs.at(n, j) < 0.0) pass = false;
                s += cache.probs.at(n, j);
            }
            worst = std::max(worst, std::abs(s - 1.0));
        }
    }
    pass = pass && worst < 1e-6;
    report(6, "mask simplex", pass,
           "100 forward passes, max |sum-1| " + std::to_string(worst));
}

// --- criterion 7: SI-SNR projection identity ------------------------------

void criterion_si_snr_identity() {
    bool pass = true;
    double worst = 0.0;
    // Large-amplitude, high-SNR pairs stay in the ε-free region.
    Rng rng = make_rng(9, "acc-sisnr");
    for (int t = 0; t < 1000; ++t) {
        Waveform s(48), e(48);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = 10.0 * gaussian(rng);
            e[i] = s[i] + 0.4 * gaussian(rng);
        }
        // Projection form.
        double dot = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            dot += s[i] * e[i];
            ss += s[i] * s[i];
        }
        double target = 0.0, noise = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double tt = dot / ss * s[i];
            target += tt * tt;
            const double err = e[i] - tt;
            noise += err * err;
        }
        const double proj = 10.0 * std::log10(target / noise);
        worst = std::max(worst, std::abs(si_snr(s, e) - proj));
        // Scale invariance.
        const double base = si_snr(s, e);
        for (double alpha : {0.1, 3.0, -2.0}) {
            Waveform scaled(e.size());
            for (std::size_t i = 0; i < e.size(); ++i) scaled[i] = alpha * e[i];
            worst = std::max(worst, std::abs(si_snr(s, scaled) - base));
        }
    }
    pass = worst < 1e-9;
    report(7, "SI-SNR projection identity", pass,
           "1000 pairs + scale invariance, max err " + std::to_string(worst));
}

// --- criteria 8 + 9: toy training, then full-pipeline counting ------------

struct ToyArtifacts {
    fs::path data_dir;
    Manifest manifest;
    SeparationModel unified;  // trained on C in {2,3}
    bool unified_ok = false;
};

double mean_si_snri(const SeparationModel& model, const std::vector<MixtureRecord>& records,
                    const fs::path& dir, double* min_per_c2 = nullptr,
                    double* min_per_c3 = nullptr) {
    auto evals = evaluate(model, records, dir, CountMode::kOracle);
    double sum = 0.0;
    std::size_t count = 0;
    double c2 = 1e300, c3 = 1e300;
    for (const auto& e : evals) {
        double rec_sum = 0.0;
        for (double v : e.si_snri_db) {
            sum += v;
            rec_sum += v;
            ++count;
        }
        const double rec_mean = rec_sum / static_cast<double>(e.si_snri_db.size());
        if (e.true_c == 2) c2 = std::min(c2, rec_mean);
        if (e.true_c == 3) c3 = std::min(c3, rec_mean);
    }
    if (min_per_c2) *min_per_c2 = c2;
    if (min_per_c3) *min_per_c3 = c3;
    return sum / static_cast<double>(count);
}

void criteria_training_and_counting(const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();

    DatasetConfig dcfg;
    dcfg.train_per_c = 20;
    dcfg.valid_per_c = 25;  // counting calibration split
    dcfg.test_per_c = 50;
    dcfg.duration_s = 0.5;
    dcfg.seed = 7;
    dcfg.out_dir = work / "toy_data";
    Manifest manifest = build_dataset(dcfg);
    auto train_two = manifest_split(manifest, "train");
    std::erase_if(train_two, [](const MixtureRecord& r) { return r.c != 2; });

    // 8a: two-speaker regime, 20 mixtures, <= 200 epochs total.
    ModelConfig mcfg = ModelConfig::toy();
    SeparationModel two_model;
    two_model.init(mcfg, 7);
    TrainConfig tc;
    tc.batch_size = 4;
    tc.regime = "two";
    tc.seed = 7;
    double two_snri = -1e300;
    std::size_t epochs_used = 0;
    std::string train_error;
    try {
        while (epochs_used < 200) {
            tc.epochs = 25;
            train(two_model, tc, manifest, dcfg.out_dir, work / "run_two");
            epochs_used += tc.epochs;
            two_snri = mean_si_snri(two_model, train_two, dcfg.out_dir);
            if (two_snri >= 5.5) break;  // small margin over the 5 dB bar
        }
    } catch (const std::exception& e) {
        train_error = e.what();
    }

    // 8b: unified regime, single parameter set across C in {2,3}.
    SeparationModel unified;
    unified.init(mcfg, 8);
    TrainConfig uc;
    uc.batch_size = 4;
    uc.regime = "two-and-three";
    uc.seed = 8;
    // 25 epochs sits where both separation quality and the per-mixture rank
    // structure of the embeddings are good; much longer unified training keeps
    // improving SI-SNRi slightly but lets the embedding subspaces of the two
    // regimes bleed into each other, which hurts source counting.
    uc.epochs = 25;
    double mean_u = 0.0, min_c2 = -1e300, min_c3 = -1e300;
    std::string unified_error;
    try {
        train(unified, uc, manifest, dcfg.out_dir, work / "run_unified");
        auto train_all = manifest_split(manifest, "train");
        mean_u = mean_si_snri(unified, train_all, dcfg.out_dir, &min_c2, &min_c3);
    } catch (const std::exception& e) {
        unified_error = e.what();
    }

    const double secs = seconds_since(t0);
    const bool pass8 = train_error.empty() && unified_error.empty() && two_snri >= 5.0 &&
                       min_c2 > 0.0 && min_c3 > 0.0 && secs < 1800.0;
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "two-spk SI-SNRi %.2f dB after %zu epochs (need >=5); unified mean %.2f dB, "
                  "worst per-mixture C=2 %.2f / C=3 %.2f dB (need >0); %.0f s%s%s",
                  two_snri, epochs_used, mean_u, min_c2, min_c3, secs,
                  train_error.empty() ? "" : ("; two-regime error: " + train_error).c_str(),
                  unified_error.empty() ? "" : ("; unified error: " + unified_error).c_str());
    report(8, "toy end-to-end learning", pass8, buf);

    // 9: counting over the 100-mixture balanced test set with the unified
    //    model's embeddings. The GDE coefficient and the rank threshold are
    //    calibrated once on the validation split, then applied to the test
    //    split unchanged.
    struct CountStats {
        std::vector<double> radii;  // Gerschgorin radii, eigenvalue order
        std::vector<double> eigs;   // eigenvalues of the full covariance
        std::size_t n = 0;
        std::size_t c = 0;
    };
    auto collect = [&](const std::vector<MixtureRecord>& records) {
        std::vector<CountStats> out;
        for (const auto& rec : records) {
            const Tensor v = unified.embeddings(wav_read(dcfg.out_dir / rec.mixture_path));
            CountStats s;
            s.n = v.dim(0);
            s.c = rec.c;
            s.radii = gde_count_auto(v, unified.cfg.gde_coeff).radii;
            s.eigs = sym_eig(covariance(v)).values;
            out.push_back(std::move(s));
        }
        return out;
    };
    auto gde_estimate = [](const CountStats& s, double coeff) {
        const double f = gde_factor(s.n, coeff);
        double sum = 0.0;
        for (double r : s.radii) sum += r;
        const double thr = f / static_cast<double>(s.radii.size()) * sum;
        for (std::size_t k = 0; k < s.radii.size(); ++k) {
            if (s.radii[k] <= thr) return k;
        }
        return s.radii.size();
    };
    auto rank_estimate = [](const CountStats& s, double threshold) {
        std::size_t count = 0;
        if (s.eigs.front() <= 0.0) return count;
        for (double lam : s.eigs) {
            if (lam > threshold * s.eigs.front()) ++count;
        }
        return count;
    };
    auto accuracy = [](const std::vector<CountStats>& stats, auto&& estimator, double param) {
        std::size_t ok = 0;
        for (const CountStats& s : stats) {
            if (estimator(s, param) == s.c) ++ok;
        }
        return 100.0 * static_cast<double>(ok) / static_cast<double>(stats.size());
    };

    const auto valid_stats = collect(manifest_split(manifest, "valid"));
    double best_coeff = 0.10, best_coeff_acc = -1.0;
    for (double coeff = 0.10; coeff <= 0.4001; coeff += 0.01) {
        const double a = accuracy(valid_stats, gde_estimate, coeff);
        if (a > best_coeff_acc) {  // ties keep the smallest coefficient
            best_coeff_acc = a;
            best_coeff = coeff;
        }
    }
    double best_th = 0.005, best_th_acc = -1.0;
    for (std::size_t i = 0; i < 25; ++i) {
        const double t = static_cast<double>(i) / 24.0;
        const double th = 0.005 * std::pow(0.5 / 0.005, t);
        const double a = accuracy(valid_stats, rank_estimate, th);
        if (a > best_th_acc) {
            best_th_acc = a;
            best_th = th;
        }
    }
    unified.cfg.gde_coeff = best_coeff;
    unified.cfg.rank_threshold = best_th;

    auto test = manifest_split(manifest, "test");
    BenchmarkResult table = counting_comparison(unified, test, dcfg.out_dir);
    const double acc = table.methods.front().average;  // balanced classes
    const bool pass9 = unified_error.empty() && acc > 50.0;
    std::snprintf(buf, sizeof buf,
                  "GDE accuracy %.1f%% on %zu mixtures (majority baseline 50%%); coefficient "
                  "%.2f and rank threshold %.3f calibrated on the validation split (%.1f%%)",
                  acc, test.size(), best_coeff, best_th, best_coeff_acc);
    report(9, "full-pipeline counting", pass9, buf);
    std::printf("%s", benchmark_table_text(table).c_str());
}

// --- criterion 10: determinism --------------------------------------------

void criterion_determinism(const fs::path& work) {
    auto one_run = [&](const fs::path& dir) {
        DatasetConfig dcfg;
        dcfg.train_per_c = 2;
        dcfg.valid_per_c = 1;
        dcfg.test_per_c = 1;
        dcfg.duration_s = 0.5;
        dcfg.seed = 13;
        dcfg.out_dir = dir / "data";
        Manifest manifest = build_dataset(dcfg);

        ModelConfig mcfg = ModelConfig::toy();
        mcfg.f_conv = 8;
        mcfg.se_reduction = 4;
        mcfg.sep_width = 8;
        mcfg.dilation_exps = 2;
        mcfg.repeats = 1;
        mcfg.embed_dim = 6;
        SeparationModel model;
        model.init(mcfg, 13);
        TrainConfig tc;
        tc.epochs = 1;
        tc.batch_size = 2;
        tc.seed = 13;
        TrainResult tr = train(model, tc, manifest, dcfg.out_dir, dir / "run");

        auto test = manifest_split(manifest, "test");
        auto evals = evaluate(model, test, dcfg.out_dir, CountMode::kOracle);
        std::ofstream(dir / "report.csv") << eval_report_csv(evals);
        return tr;
    };
    TrainResult a = one_run(work / "det_a");
    TrainResult b = one_run(work / "det_b");

    const bool manifests = slurp(work / "det_a/data/manifest.jsonl") ==
                           slurp(work / "det_b/data/manifest.jsonl");
    Manifest ma = manifest_read(work / "det_a/data/manifest.jsonl");
    bool wavs = true;
    for (const auto& rec : ma)
        wavs = wavs && slurp(work / "det_a/data" / rec.mixture_path) ==
                           slurp(work / "det_b/data" / rec.mixture_path);
    const bool ckpts = slurp(a.final_checkpoint) == slurp(b.final_checkpoint);
    const bool reports = slurp(work / "det_a/report.csv") == slurp(work / "det_b/report.csv");
    const bool pass = manifests && wavs && ckpts && reports;
    std::string detail = std::string("manifest ") + (manifests ? "ok" : "DIFFERS") +
                         ", wavs " + (wavs ? "ok" : "DIFFER") + ", checkpoint " +
                         (ckpts ? "ok" : "DIFFERS") + ", report " +
                         (reports ? "ok" : "DIFFERS");
    report(10, "determinism", pass, detail);
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "sepcount_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion_cola();
    criterion_gradients();
    criterion_gde_benchmark();
    criterion_attractor_oracle();
    criterion_pit_oracle();
    criterion_mask_simplex();
    criterion_si_snr_identity();
    criteria_training_and_counting(work);
    criterion_determinism(work);

    fs::remove_all(work);
    if (g_failures > 0) {
        std::printf("%d criteria FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria passed\n");
    return 0;
}
