#ifndef SCA_LEAKAGE_SIM_HPP
#define SCA_LEAKAGE_SIM_HPP

#include "sca/trace_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace sca {

// Synthetic first-round S-box leakage. Selected positions carry the Hamming
// weight of the manipulated byte on top of white Gaussian noise; everything
// else is pure noise.
struct SimConfig {
    std::size_t n_traces = 0;
    std::size_t n_samples = 0;
    std::vector<std::size_t> leak_positions;      // HW(v) or HW(v^m)
    std::vector<std::size_t> mask_leak_positions; // HW(m); ms1 only
    double noise_sigma = 1.0;
    std::optional<std::uint8_t> fixed_key; // random per-trace keys when absent
    std::uint64_t seed = 0;

    // Throws ArgumentError when the config is inconsistent with the scheme.
    void validate(Scheme scheme) const;
};

SimConfig sim_config_from_json(const nlohmann::json &j);
nlohmann::json sim_config_to_json(const SimConfig &cfg);

// Deterministic given (cfg.seed); per-trace draws use an RNG derived from
// (seed, trace_index) so generation order never matters.
TraceSet simulate(const SimConfig &cfg, Scheme scheme);

// Per-sample variance of class-conditional means over mean class-conditional
// variance. Degenerate cases: zero within-class variance caps at 1e12, a
// fully constant sample scores 0.
std::vector<double> estimate_snr(const TraceSet &ts, const std::vector<std::uint8_t> &labels);

inline constexpr double kSnrCap = 1e12;

} // namespace sca

#endif
