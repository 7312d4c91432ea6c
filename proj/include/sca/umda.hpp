#ifndef SCA_UMDA_HPP
#define SCA_UMDA_HPP

#include "sca/metrics.hpp"
#include "sca/poi.hpp"
#include "sca/trace_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sca {

// Univariate marginal distribution algorithm over binary POI genomes:
// evaluate R candidates, keep the best N, re-estimate the per-position
// Bernoulli marginals from them, clamp, resample, repeat.

enum class UmdaInitKind { uniform, correlation_weighted };

struct UmdaInit {
    UmdaInitKind kind = UmdaInitKind::uniform;
    // Bernoulli probability for uniform init; base probability scaled by
    // score/mean(score) for correlation-weighted init.
    double p0 = 0.1;
};

struct UmdaConfig {
    std::size_t population_size = 40; // R
    std::size_t selection_size = 10;  // N, must be < R
    std::size_t max_generations = 30; // G
    std::size_t stagnation_limit = 10; // stop after this many unimproved generations
    UmdaInit init;
    // Per-position probability bounds; defaults to [1/L, 1-1/L] when unset.
    std::optional<std::pair<double, double>> clamp;
    std::size_t fitness_traces = 50;      // attack traces per evaluation
    std::size_t fitness_repetitions = 2;  // repetitions per evaluation
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_poi; // soft cap, enforced via poi_penalty
    double poi_penalty = 0.0;           // weight on selected_count - max_poi excess

    void validate() const;
    std::pair<double, double> clamp_bounds(std::size_t genome_length) const;
};

UmdaConfig umda_config_from_json(const nlohmann::json &j);
nlohmann::json umda_config_to_json(const UmdaConfig &cfg);

struct UmdaState {
    std::vector<double> marginals;
    std::vector<PoiCandidate> population;
    std::vector<double> fitness; // lower is better
    std::size_t generation = 0;
    PoiCandidate best_candidate;
    double best_fitness = 0.0;
    bool has_best = false;
};

// Fitness of a candidate given the seed for its evaluation; lower is better.
using FitnessFn = std::function<double(const PoiCandidate &, std::uint64_t eval_seed)>;

// Sentinel assigned when a candidate cannot be evaluated (e.g. template
// build failure); strictly worse than any real fitness.
inline constexpr double kFailedFitness = 1e9;

struct GenerationRecord {
    std::size_t generation; // 1-based
    double best_fitness;    // best ever, after this generation
    double mean_fitness;    // mean of this generation's evaluations
};

struct UmdaResult {
    PoiCandidate best;
    double best_fitness = 0.0;
    std::vector<GenerationRecord> history;
    std::vector<double> final_marginals;
};

// --- loop pieces -----------------------------------------------------------

UmdaState init_population(const UmdaConfig &cfg, const std::optional<PoiScores> &scores,
                          std::size_t n_samples);

// Indices of the N lowest-fitness candidates, ties toward lower index.
std::vector<std::size_t> select_truncation(const UmdaState &state, std::size_t N);

std::vector<double> estimate_marginals(const std::vector<PoiCandidate> &selected,
                                       std::pair<double, double> clamp);

// R Bernoulli genomes; an all-zero draw is repaired by setting the highest
// -marginal position.
std::vector<PoiCandidate> sample_population(const std::vector<double> &marginals, std::size_t R,
                                            std::uint64_t seed);

// --- attack-backed fitness ---------------------------------------------------

struct AttackFitnessOptions {
    LeakageModel leakage_model = LeakageModel::hamming_weight;
    bool pooled = true;
    double epsilon = 1e-6;
};

// Normalized area under the mean-rank curve plus the optional POI-count
// penalty; 0 for instant key recovery, 255 for a flat-worst curve.
double auc_fitness(const GeCurve &curve, double poi_penalty, std::optional<std::size_t> max_poi,
                   std::size_t selected_count);

// Builds templates on `profiling` restricted to the candidate's POIs and
// scores the candidate by guessing entropy on `validation`. Build failures
// yield kFailedFitness instead of propagating.
double evaluate_fitness(const PoiCandidate &candidate, const TraceSet &profiling,
                        const TraceSet &validation, const UmdaConfig &cfg,
                        const AttackFitnessOptions &opts, std::uint64_t eval_seed);

FitnessFn make_attack_fitness(const TraceSet &profiling, const TraceSet &validation,
                              const UmdaConfig &cfg, const AttackFitnessOptions &opts);

// --- full loop ---------------------------------------------------------------

// Runs the loop until max_generations or stagnation_limit unimproved
// generations. The best candidate ever seen is preserved and re-injected
// into each sampled population. Fitness evaluations within a generation can
// run on `threads` workers; per-candidate seeds derive from
// (seed, generation, index) so the schedule never changes results.
UmdaResult run_umda(const UmdaConfig &cfg, std::size_t n_samples, const FitnessFn &fitness,
                    const std::optional<PoiScores> &scores = std::nullopt, unsigned threads = 1);

UmdaResult run_umda(const TraceSet &profiling, const TraceSet &validation, const UmdaConfig &cfg,
                    const AttackFitnessOptions &opts,
                    const std::optional<PoiScores> &scores = std::nullopt, unsigned threads = 1);

void save_history_csv(const std::vector<GenerationRecord> &history, const std::string &path,
                      const std::string &comment = "");
void save_marginals_csv(const std::vector<double> &marginals, const std::string &path,
                        const std::string &comment = "");

} // namespace sca

#endif
