#ifndef SCA_METRICS_HPP
#define SCA_METRICS_HPP

#include "sca/template_attack.hpp"
#include "sca/trace_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sca {

// Guessing entropy as a function of attack-trace count, averaged over
// repeated attacks. mean_rank[t-1] is the mean rank after t traces.
struct GeCurve {
    std::vector<double> mean_rank;
    std::size_t n_repetitions = 0;
    std::vector<double> final_ranks; // one terminal rank per repetition
};

// Tukey box plot summary.
struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
};

// Runs `reps` attacks of T traces each against the shared model and averages
// the rank trajectories. Attack subsets are seeded shuffles of the pool,
// disjoint across repetitions while the pool lasts. The pool must carry a
// single fixed key. `threads` parallelizes repetitions without changing
// results.
GeCurve guessing_entropy(const TemplateModel &model, const TraceSet &attack_pool, std::size_t T,
                         std::size_t reps, std::uint64_t seed, unsigned threads = 1);

// Smallest t whose whole suffix has mean rank 0; nullopt when the curve
// never settles at 0.
std::optional<std::size_t> q_tge(const GeCurve &curve);

// Quartiles by linear interpolation, whiskers at the most extreme points
// within 1.5*IQR of the quartiles, the rest flagged as outliers.
BoxStats boxplot_stats(const std::vector<double> &final_ranks);

// t,mean_rank rows; `comment` (when non-empty) is emitted first as a
// '#'-prefixed line so artifacts carry their provenance.
void save_ge_curve_csv(const GeCurve &curve, const std::string &path,
                       const std::string &comment = "");

nlohmann::json ge_curve_to_json(const GeCurve &curve);
nlohmann::json box_stats_to_json(const BoxStats &stats);

} // namespace sca

#endif
