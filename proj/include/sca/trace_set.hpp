#ifndef SCA_TRACE_SET_HPP
#define SCA_TRACE_SET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sca {

enum class Scheme { unprotected, ms1, ms2, external };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string &name);

// AES S-box lookup of p XOR k (the classic first-round S-box output target).
std::uint8_t compute_intermediate(std::uint8_t p, std::uint8_t k);

// Class labeling convention: identity keeps the full byte (256 classes),
// hamming_weight maps it to its popcount (9 classes).
enum class LeakageModel { identity, hamming_weight };

std::string leakage_model_name(LeakageModel m);
LeakageModel leakage_model_from_name(const std::string &name);

inline int class_count(LeakageModel m) { return m == LeakageModel::identity ? 256 : 9; }

std::uint8_t leakage_label(LeakageModel m, std::uint8_t v);

// Power traces plus per-trace metadata for the single targeted byte.
// Immutable after construction; invariants are checked by the constructor.
class TraceSet {
  public:
    TraceSet(std::size_t n_traces, std::size_t n_samples, std::vector<float> samples,
             std::vector<std::uint8_t> plaintexts, std::vector<std::uint8_t> keys,
             std::optional<std::vector<std::uint8_t>> masks, Scheme scheme,
             std::optional<std::uint64_t> seed = std::nullopt);

    std::size_t n_traces() const { return n_traces_; }
    std::size_t n_samples() const { return n_samples_; }

    float sample(std::size_t trace, std::size_t idx) const {
        return samples_[trace * n_samples_ + idx];
    }
    std::span<const float> trace(std::size_t i) const {
        return {samples_.data() + i * n_samples_, n_samples_};
    }
    const std::vector<float> &samples() const { return samples_; }

    const std::vector<std::uint8_t> &plaintexts() const { return plaintexts_; }
    const std::vector<std::uint8_t> &keys() const { return keys_; }
    const std::optional<std::vector<std::uint8_t>> &masks() const { return masks_; }
    Scheme scheme() const { return scheme_; }
    std::optional<std::uint64_t> seed() const { return seed_; }

    // Row subset in the given order; metadata follows the rows.
    TraceSet subset(const std::vector<std::size_t> &rows) const;

  private:
    std::size_t n_traces_;
    std::size_t n_samples_;
    std::vector<float> samples_; // row-major [n_traces x n_samples]
    std::vector<std::uint8_t> plaintexts_;
    std::vector<std::uint8_t> keys_;
    std::optional<std::vector<std::uint8_t>> masks_;
    Scheme scheme_;
    std::optional<std::uint64_t> seed_;
};

// label_i = label(intermediate(p_i, k_i)) under the given model.
std::vector<std::uint8_t> label_traces(const TraceSet &ts, LeakageModel model);

// On-disk container. Layout:
//   "SCAT" | version u16 LE | n_traces u32 LE | n_samples u32 LE
//   | samples f32 LE row-major
//   | JSON trailer {"scheme","plaintexts","keys","masks","seed"}
//   | trailer length u32 LE
// Hex strings in the trailer encode one byte per trace.
void save_traceset(const TraceSet &ts, const std::string &path);
TraceSet load_traceset(const std::string &path);

// Seeded shuffle, then split into (first n_profiling rows, rest).
std::pair<TraceSet, TraceSet> split_traceset(const TraceSet &ts, std::size_t n_profiling,
                                             std::uint64_t seed);

} // namespace sca

#endif
