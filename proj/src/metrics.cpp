#include "sca/metrics.hpp"

#include "sca/errors.hpp"
#include "sca/parallel.hpp"
#include "sca/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace sca {

namespace {

// Derivation stream ids under the metrics seed.
constexpr std::uint64_t kGeShuffleStream = 0x6765u; // "ge"

// Rank trajectory of a single attack over rows, evaluated after each prefix.
std::vector<int> rank_trajectory(const TemplateModel &model, const TraceSet &pool,
                                 const std::vector<std::size_t> &rows, std::uint8_t true_key) {
    const Eigen::MatrixXd class_scores = per_trace_class_scores(model, pool, rows);
    std::array<double, 256> scores{};
    std::vector<int> ranks;
    ranks.reserve(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        const std::uint8_t p = pool.plaintexts()[rows[t]];
        for (int k = 0; k < 256; ++k) {
            const std::uint8_t label = leakage_label(
                model.leakage_model(), compute_intermediate(p, static_cast<std::uint8_t>(k)));
            scores[static_cast<std::size_t>(k)] +=
                class_scores(static_cast<Eigen::Index>(t), label);
        }
        const double s = scores[true_key];
        int rank = 0;
        for (int k = 0; k < 256; ++k) {
            if (scores[static_cast<std::size_t>(k)] > s)
                ++rank;
            else if (scores[static_cast<std::size_t>(k)] == s && k < int(true_key))
                ++rank;
        }
        ranks.push_back(rank);
    }
    return ranks;
}

double quantile_linear(const std::vector<double> &sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1)
        return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

GeCurve guessing_entropy(const TemplateModel &model, const TraceSet &attack_pool, std::size_t T,
                         std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (T < 1)
        throw ArgumentError("T must be at least 1");
    if (reps < 1)
        throw ArgumentError("reps must be at least 1");
    if (attack_pool.n_traces() < T)
        throw ArgumentError("attack pool smaller than T");
    const std::uint8_t true_key = attack_pool.keys()[0];
    for (std::uint8_t k : attack_pool.keys())
        if (k != true_key)
            throw ArgumentError("guessing entropy needs an attack pool with one fixed key");

    // Repetition r takes chunk (r % per_block) of the shuffle for block
    // (r / per_block): subsets are disjoint within a block, and fresh
    // shuffles extend the supply when reps exceed pool/T.
    const std::size_t per_block = attack_pool.n_traces() / T;
    std::vector<std::vector<int>> trajectories(reps);

    parallel_for(reps, threads, [&](std::size_t r) {
        const std::size_t block = r / per_block;
        const std::size_t chunk = r % per_block;
        SeededRng rng(derive_seed(seed, kGeShuffleStream, block));
        const auto order = rng.permutation(attack_pool.n_traces());
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(chunk * T),
                                      order.begin() + static_cast<std::ptrdiff_t>((chunk + 1) * T));
        trajectories[r] = rank_trajectory(model, attack_pool, rows, true_key);
    });

    GeCurve curve;
    curve.n_repetitions = reps;
    curve.mean_rank.assign(T, 0.0);
    curve.final_ranks.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t t = 0; t < T; ++t)
            curve.mean_rank[t] += trajectories[r][t];
        curve.final_ranks.push_back(trajectories[r][T - 1]);
    }
    for (double &v : curve.mean_rank)
        v /= static_cast<double>(reps);
    return curve;
}

std::optional<std::size_t> q_tge(const GeCurve &curve) {
    const auto &m = curve.mean_rank;
    std::size_t last_nonzero = 0;
    bool any_nonzero = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] != 0.0) {
            last_nonzero = i;
            any_nonzero = true;
        }
    }
    if (!any_nonzero)
        return 1;
    if (last_nonzero == m.size() - 1)
        return std::nullopt;
    return last_nonzero + 2; // 1-based position after the last nonzero entry
}

BoxStats boxplot_stats(const std::vector<double> &final_ranks) {
    if (final_ranks.empty())
        throw ArgumentError("boxplot needs at least one value");
    std::vector<double> sorted = final_ranks;
    std::sort(sorted.begin(), sorted.end());

    BoxStats stats;
    stats.q1 = quantile_linear(sorted, 0.25);
    stats.median = quantile_linear(sorted, 0.5);
    stats.q3 = quantile_linear(sorted, 0.75);
    const double iqr = stats.q3 - stats.q1;
    const double lo_fence = stats.q1 - 1.5 * iqr;
    const double hi_fence = stats.q3 + 1.5 * iqr;

    stats.whisker_low = stats.q1;
    stats.whisker_high = stats.q3;
    for (double v : sorted) {
        if (v >= lo_fence) {
            stats.whisker_low = v;
            break;
        }
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (*it <= hi_fence) {
            stats.whisker_high = *it;
            break;
        }
    }
    for (double v : sorted)
        if (v < lo_fence || v > hi_fence)
            stats.outliers.push_back(v);
    return stats;
}

void save_ge_curve_csv(const GeCurve &curve, const std::string &path, const std::string &comment) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    if (!comment.empty())
        os << "# " << comment << '\n';
    os << "t,mean_rank\n";
    char buf[64];
    for (std::size_t t = 0; t < curve.mean_rank.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", t + 1, curve.mean_rank[t]);
        os << buf;
    }
}

nlohmann::json ge_curve_to_json(const GeCurve &curve) {
    nlohmann::json j;
    j["mean_rank"] = curve.mean_rank;
    j["n_repetitions"] = curve.n_repetitions;
    j["final_ranks"] = curve.final_ranks;
    const auto q = q_tge(curve);
    j["q_tge"] = q ? nlohmann::json(*q) : nlohmann::json();
    return j;
}

nlohmann::json box_stats_to_json(const BoxStats &stats) {
    nlohmann::json j;
    j["median"] = stats.median;
    j["q1"] = stats.q1;
    j["q3"] = stats.q3;
    j["whisker_low"] = stats.whisker_low;
    j["whisker_high"] = stats.whisker_high;
    j["outliers"] = stats.outliers;
    return j;
}

} // namespace sca
