#ifndef SCA_POI_HPP
#define SCA_POI_HPP

#include "sca/trace_set.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sca {

// Binary inclusion mask over time samples; the template input and the
// search genome.
class PoiCandidate {
  public:
    PoiCandidate() = default;
    explicit PoiCandidate(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

    static PoiCandidate from_indices(std::size_t n_samples,
                                     const std::vector<std::size_t> &indices);

    std::size_t size() const { return bits_.size(); }
    bool test(std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }

    std::size_t selected_count() const;
    std::vector<std::size_t> indices() const;
    const std::vector<std::uint8_t> &bits() const { return bits_; }

    bool operator==(const PoiCandidate &other) const = default;

  private:
    std::vector<std::uint8_t> bits_;
};

enum class PoiMethod { abs_pearson, snr };

std::string poi_method_name(PoiMethod m);
PoiMethod poi_method_from_name(const std::string &name);

// Non-negative per-sample relevance scores.
struct PoiScores {
    std::vector<double> scores;
    PoiMethod method = PoiMethod::abs_pearson;
};

// Absolute Pearson correlation between each sample column and the numeric
// labels. Constant columns score 0.
PoiScores correlation_ranking(const TraceSet &ts, const std::vector<std::uint8_t> &labels);

// SNR-based scores via estimate_snr.
PoiScores snr_ranking(const TraceSet &ts, const std::vector<std::uint8_t> &labels);

// Greedy descending-score pick, skipping indices closer than min_spacing to
// an already selected one; ties break toward the lower index. `exhausted`
// (when non-null) is set if spacing made fewer than k picks feasible.
PoiCandidate select_top_k(const PoiScores &scores, std::size_t k, std::size_t min_spacing = 1,
                          bool *exhausted = nullptr);

void save_poi_scores_csv(const PoiScores &scores, const std::string &path);

} // namespace sca

#endif
