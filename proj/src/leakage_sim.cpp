#include "sca/leakage_sim.hpp"

#include "sca/errors.hpp"
#include "sca/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>

namespace sca {

void SimConfig::validate(Scheme scheme) const {
    if (scheme == Scheme::external)
        throw ArgumentError("cannot simulate scheme 'external'");
    if (n_traces < 1 || n_samples < 1)
        throw ArgumentError("simulation needs n_traces >= 1 and n_samples >= 1");
    if (noise_sigma < 0.0)
        throw ArgumentError("noise_sigma must be non-negative");
    for (std::size_t p : leak_positions)
        if (p >= n_samples)
            throw ArgumentError("leak position " + std::to_string(p) + " out of range");
    for (std::size_t p : mask_leak_positions) {
        if (p >= n_samples)
            throw ArgumentError("mask leak position " + std::to_string(p) + " out of range");
        if (std::find(leak_positions.begin(), leak_positions.end(), p) != leak_positions.end())
            throw ArgumentError("leak and mask leak positions must be disjoint");
    }
    if (scheme == Scheme::ms1 && mask_leak_positions.empty())
        throw ArgumentError("scheme ms1 requires non-empty mask_leak_positions");
    if (scheme != Scheme::ms1 && !mask_leak_positions.empty())
        throw ArgumentError("mask_leak_positions must be empty for schemes other than ms1");
}

SimConfig sim_config_from_json(const nlohmann::json &j) {
    SimConfig cfg;
    try {
        cfg.n_traces = j.at("n_traces").get<std::size_t>();
        cfg.n_samples = j.at("n_samples").get<std::size_t>();
        cfg.leak_positions = j.at("leak_positions").get<std::vector<std::size_t>>();
        if (j.contains("mask_leak_positions") && !j.at("mask_leak_positions").is_null())
            cfg.mask_leak_positions = j.at("mask_leak_positions").get<std::vector<std::size_t>>();
        cfg.noise_sigma = j.at("noise_sigma").get<double>();
        if (j.contains("fixed_key") && !j.at("fixed_key").is_null()) {
            const auto key = j.at("fixed_key").get<int>();
            if (key < 0 || key > 255)
                throw ArgumentError("fixed_key must be a byte");
            cfg.fixed_key = static_cast<std::uint8_t>(key);
        }
        if (j.contains("seed") && !j.at("seed").is_null())
            cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception &e) {
        throw ArgumentError(std::string("bad simulation config: ") + e.what());
    }
    return cfg;
}

nlohmann::json sim_config_to_json(const SimConfig &cfg) {
    nlohmann::json j;
    j["n_traces"] = cfg.n_traces;
    j["n_samples"] = cfg.n_samples;
    j["leak_positions"] = cfg.leak_positions;
    j["mask_leak_positions"] = cfg.mask_leak_positions;
    j["noise_sigma"] = cfg.noise_sigma;
    j["fixed_key"] = cfg.fixed_key ? nlohmann::json(int(*cfg.fixed_key)) : nlohmann::json();
    j["seed"] = cfg.seed;
    return j;
}

TraceSet simulate(const SimConfig &cfg, Scheme scheme) {
    cfg.validate(scheme);

    const bool masked = scheme == Scheme::ms1 || scheme == Scheme::ms2;
    std::vector<float> samples(cfg.n_traces * cfg.n_samples);
    std::vector<std::uint8_t> plaintexts(cfg.n_traces);
    std::vector<std::uint8_t> keys(cfg.n_traces);
    std::optional<std::vector<std::uint8_t>> masks;
    if (masked)
        masks.emplace(cfg.n_traces);

    for (std::size_t i = 0; i < cfg.n_traces; ++i) {
        SeededRng rng(derive_seed(cfg.seed, i));
        const std::uint8_t p = rng.uniform_byte();
        const std::uint8_t k = cfg.fixed_key ? *cfg.fixed_key : rng.uniform_byte();
        plaintexts[i] = p;
        keys[i] = k;
        const std::uint8_t v = compute_intermediate(p, k);

        float *row = samples.data() + i * cfg.n_samples;
        for (std::size_t s = 0; s < cfg.n_samples; ++s)
            row[s] = static_cast<float>(rng.gaussian(cfg.noise_sigma));

        if (masked) {
            const std::uint8_t m = rng.uniform_byte();
            (*masks)[i] = m;
            const auto manipulated = static_cast<std::uint8_t>(v ^ m);
            for (std::size_t pos : cfg.leak_positions)
                row[pos] += static_cast<float>(std::popcount(manipulated));
            if (scheme == Scheme::ms1)
                for (std::size_t pos : cfg.mask_leak_positions)
                    row[pos] += static_cast<float>(std::popcount(m));
        } else {
            for (std::size_t pos : cfg.leak_positions)
                row[pos] += static_cast<float>(std::popcount(v));
        }
    }

    return TraceSet(cfg.n_traces, cfg.n_samples, std::move(samples), std::move(plaintexts),
                    std::move(keys), std::move(masks), scheme, cfg.seed);
}

std::vector<double> estimate_snr(const TraceSet &ts, const std::vector<std::uint8_t> &labels) {
    if (labels.size() != ts.n_traces())
        throw ArgumentError("label array length does not match trace count");

    // Bucket rows per occurring class.
    std::map<std::uint8_t, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < labels.size(); ++i)
        classes[labels[i]].push_back(i);
    for (const auto &[label, rows] : classes)
        if (rows.size() < 2)
            throw InsufficientDataError("class " + std::to_string(int(label)) +
                                            " has fewer than 2 traces",
                                        label);

    const std::size_t n_samples = ts.n_samples();
    std::vector<double> snr(n_samples);
    std::vector<double> means(classes.size());
    std::vector<double> vars(classes.size());

    for (std::size_t s = 0; s < n_samples; ++s) {
        std::size_t c = 0;
        for (const auto &[label, rows] : classes) {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t r : rows) {
                const double v = ts.sample(r, s);
                sum += v;
                sumsq += v * v;
            }
            const double n = static_cast<double>(rows.size());
            means[c] = sum / n;
            vars[c] = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
            ++c;
        }
        double mean_of_means = 0.0;
        for (double m : means)
            mean_of_means += m;
        mean_of_means /= static_cast<double>(means.size());
        double signal = 0.0;
        for (double m : means)
            signal += (m - mean_of_means) * (m - mean_of_means);
        signal /= static_cast<double>(means.size());
        double noise = 0.0;
        for (double v : vars)
            noise += v;
        noise /= static_cast<double>(vars.size());

        if (noise <= 0.0)
            snr[s] = signal <= 0.0 ? 0.0 : kSnrCap;
        else
            snr[s] = std::min(signal / noise, kSnrCap);
    }
    return snr;
}

} // namespace sca
