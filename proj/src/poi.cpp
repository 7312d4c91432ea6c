#include "sca/poi.hpp"

#include "sca/errors.hpp"
#include "sca/leakage_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sca {

PoiCandidate PoiCandidate::from_indices(std::size_t n_samples,
                                        const std::vector<std::size_t> &indices) {
    std::vector<std::uint8_t> bits(n_samples, 0);
    for (std::size_t i : indices) {
        if (i >= n_samples)
            throw ArgumentError("POI index " + std::to_string(i) + " out of range");
        bits[i] = 1;
    }
    return PoiCandidate(std::move(bits));
}

std::size_t PoiCandidate::selected_count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<std::size_t> PoiCandidate::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i])
            out.push_back(i);
    return out;
}

std::string poi_method_name(PoiMethod m) {
    return m == PoiMethod::abs_pearson ? "abs_pearson" : "snr";
}

PoiMethod poi_method_from_name(const std::string &name) {
    if (name == "abs_pearson")
        return PoiMethod::abs_pearson;
    if (name == "snr")
        return PoiMethod::snr;
    throw ArgumentError("unknown POI method '" + name + "'");
}

PoiScores correlation_ranking(const TraceSet &ts, const std::vector<std::uint8_t> &labels) {
    if (labels.size() != ts.n_traces())
        throw ArgumentError("label array length does not match trace count");
    if (ts.n_traces() < 3)
        throw ArgumentError("correlation ranking needs at least 3 traces");

    const double n = static_cast<double>(ts.n_traces());
    double label_sum = 0.0, label_sumsq = 0.0;
    for (std::uint8_t l : labels) {
        label_sum += l;
        label_sumsq += double(l) * double(l);
    }
    const double label_var = label_sumsq - label_sum * label_sum / n;
    if (label_var <= 0.0)
        throw ArgumentError("labels are all equal; correlation is undefined");

    PoiScores result;
    result.method = PoiMethod::abs_pearson;
    result.scores.resize(ts.n_samples());
    for (std::size_t s = 0; s < ts.n_samples(); ++s) {
        double x_sum = 0.0, x_sumsq = 0.0, xy_sum = 0.0;
        for (std::size_t i = 0; i < ts.n_traces(); ++i) {
            const double x = ts.sample(i, s);
            x_sum += x;
            x_sumsq += x * x;
            xy_sum += x * labels[i];
        }
        const double x_var = x_sumsq - x_sum * x_sum / n;
        if (x_var <= 0.0) {
            result.scores[s] = 0.0;
            continue;
        }
        const double cov = xy_sum - x_sum * label_sum / n;
        const double r = cov / std::sqrt(x_var * label_var);
        result.scores[s] = std::min(std::abs(r), 1.0);
    }
    return result;
}

PoiScores snr_ranking(const TraceSet &ts, const std::vector<std::uint8_t> &labels) {
    PoiScores result;
    result.method = PoiMethod::snr;
    result.scores = estimate_snr(ts, labels);
    return result;
}

PoiCandidate select_top_k(const PoiScores &scores, std::size_t k, std::size_t min_spacing,
                          bool *exhausted) {
    if (k < 1)
        throw ArgumentError("k must be at least 1");
    if (min_spacing < 1)
        throw ArgumentError("min_spacing must be at least 1");
    const std::size_t n = scores.scores.size();
    if (k > n)
        throw ArgumentError("k exceeds the number of samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores.scores[a] > scores.scores[b];
    });

    std::vector<std::size_t> picked;
    for (std::size_t idx : order) {
        if (picked.size() == k)
            break;
        bool blocked = false;
        for (std::size_t p : picked) {
            const std::size_t dist = p > idx ? p - idx : idx - p;
            if (dist < min_spacing) {
                blocked = true;
                break;
            }
        }
        if (!blocked)
            picked.push_back(idx);
    }
    if (exhausted)
        *exhausted = picked.size() < k;
    return PoiCandidate::from_indices(n, picked);
}

void save_poi_scores_csv(const PoiScores &scores, const std::string &path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    os << "index,score\n";
    char buf[64];
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", i, scores.scores[i]);
        os << buf;
    }
}

} // namespace sca
