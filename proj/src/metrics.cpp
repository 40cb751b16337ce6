#include "sepcount/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace sepcount {

Waveform trim_edges(const Waveform& w, std::size_t per_side) {
    if (w.size() <= 2 * per_side) return w;
    return Waveform(w.begin() + static_cast<std::ptrdiff_t>(per_side),
                    w.end() - static_cast<std::ptrdiff_t>(per_side));
}

double clamp_db(double value) {
    return std::clamp(value, -kMetricClampDb, kMetricClampDb);
}

double si_snri(const Waveform& reference, const Waveform& estimate, const Waveform& mixture) {
    return clamp_db(si_snr(reference, estimate)) - clamp_db(si_snr(reference, mixture));
}

double sdr_plain(const Waveform& reference, const Waveform& estimate) {
    if (reference.size() != estimate.size() || reference.empty()) {
        throw ShapeError("sdr_plain: signals must have equal nonzero length");
    }
    double ref_pow = 0.0, err_pow = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        ref_pow += reference[i] * reference[i];
        const double e = reference[i] - estimate[i];
        err_pow += e * e;
    }
    if (ref_pow == 0.0) throw NumericError("sdr_plain: all-zero reference signal");
    if (err_pow == 0.0) return kMetricClampDb;
    return clamp_db(10.0 * std::log10(ref_pow / err_pow));
}

double sdri(const Waveform& reference, const Waveform& estimate, const Waveform& mixture) {
    return sdr_plain(reference, estimate) - sdr_plain(reference, mixture);
}

CountingAccuracy counting_accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw ConfigError("counting_accuracy: empty record set");
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_c;  // C -> (correct, total)
    for (const EvalRecord& r : records) {
        auto& [ok, total] = per_c[r.true_c];
        ++total;
        if (r.estimated_c == r.true_c) ++ok;
    }
    CountingAccuracy acc;
    double sum = 0.0;
    for (const auto& [c, stats] : per_c) {
        acc.c_values.push_back(c);
        const double pct = 100.0 * static_cast<double>(stats.first) /
                           static_cast<double>(stats.second);
        acc.per_c.push_back(pct);
        sum += pct;
    }
    acc.average = sum / static_cast<double>(acc.per_c.size());
    return acc;
}

EvalRecord evaluate_separation(const std::string& id,
                               const std::vector<Waveform>& sources,
                               const std::vector<Waveform>& estimates,
                               const Waveform& mixture) {
    EvalRecord rec;
    rec.id = id;
    rec.true_c = sources.size();
    rec.estimated_c = estimates.size();
    rec.count_mismatch = sources.size() != estimates.size();

    std::vector<Waveform> srcs, ests;
    for (const Waveform& s : sources) srcs.push_back(trim_edges(s));
    for (const Waveform& e : estimates) ests.push_back(trim_edges(e));
    const Waveform mix = trim_edges(mixture);

    // Best injective assignment of estimates to sources over the matched pairs.
    const std::size_t p = std::min(srcs.size(), ests.size());
    std::vector<std::size_t> src_idx(srcs.size());
    std::iota(src_idx.begin(), src_idx.end(), 0);

    double best_mean = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_assign;
    std::sort(src_idx.begin(), src_idx.end());
    do {
        // Estimates 0..p−1 pair with the first p entries of this ordering.
        double mean = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            if (i >= ests.size()) break;
            mean += clamp_db(si_snr(srcs[src_idx[i]], ests[i]));
        }
        mean /= static_cast<double>(p);
        if (mean > best_mean) {
            best_mean = mean;
            best_assign.assign(src_idx.begin(), src_idx.begin() + static_cast<std::ptrdiff_t>(p));
        }
    } while (std::next_permutation(src_idx.begin(), src_idx.end()));

    rec.permutation = best_assign;
    for (std::size_t i = 0; i < p; ++i) {
        const Waveform& s = srcs[best_assign[i]];
        const Waveform& e = ests[i];
        rec.si_snr_db.push_back(clamp_db(si_snr(s, e)));
        rec.si_snri_db.push_back(si_snri(s, e, mix));
        rec.sdr_db.push_back(sdr_plain(s, e));
        rec.sdri_db.push_back(sdri(s, e, mix));
    }
    return rec;
}

namespace {

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::string eval_report_csv(const std::vector<EvalRecord>& records) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "id,true_c,estimated_c,count_mismatch,source,si_snr_db,si_snri_db,sdr_db,sdri_db\n";
    for (const EvalRecord& r : records) {
        for (std::size_t i = 0; i < r.si_snr_db.size(); ++i) {
            os << r.id << "," << r.true_c << "," << r.estimated_c << ","
               << (r.count_mismatch ? 1 : 0) << "," << i << "," << r.si_snr_db[i] << ","
               << r.si_snri_db[i] << "," << r.sdr_db[i] << "," << r.sdri_db[i] << "\n";
        }
    }
    return os.str();
}

std::string eval_report_text(const std::vector<EvalRecord>& records) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    std::map<std::size_t, std::vector<const EvalRecord*>> by_c;
    for (const EvalRecord& r : records) by_c[r.true_c].push_back(&r);

    os << "Separation metrics (SDR is the projection-free stand-in, not BSS-eval)\n";
    for (const auto& [c, group] : by_c) {
        std::vector<double> snri, sdri_all;
        std::size_t count_ok = 0;
        for (const EvalRecord* r : group) {
            for (double v : r->si_snri_db) snri.push_back(v);
            for (double v : r->sdri_db) sdri_all.push_back(v);
            if (!r->count_mismatch && r->estimated_c == r->true_c) ++count_ok;
            os << "    " << r->id << ": C=" << r->true_c << " Chat=" << r->estimated_c
               << " SI-SNRi " << mean_of(r->si_snri_db) << " dB\n";
        }
        os << "  " << c << "-speaker (" << group.size() << " utterances): mean SI-SNRi "
           << mean_of(snri) << " dB, mean SDRi " << mean_of(sdri_all) << " dB, count accuracy "
           << 100.0 * static_cast<double>(count_ok) / static_cast<double>(group.size())
           << " %\n";
    }
    return os.str();
}

}  // namespace sepcount
