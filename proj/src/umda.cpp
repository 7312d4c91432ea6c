#include "sca/umda.hpp"

#include "sca/errors.hpp"
#include "sca/parallel.hpp"
#include "sca/rng.hpp"
#include "sca/template_attack.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace sca {

namespace {

// Seed derivation streams under the UMDA seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kEvalStream = 3;

} // namespace

void UmdaConfig::validate() const {
    if (selection_size < 1 || selection_size >= population_size)
        throw ArgumentError("selection size must satisfy 1 <= N < R");
    if (max_generations < 1)
        throw ArgumentError("max_generations must be at least 1");
    if (stagnation_limit < 1)
        throw ArgumentError("stagnation_limit must be at least 1");
    if (init.p0 <= 0.0 || init.p0 > 1.0)
        throw ArgumentError("init p0 must be in (0, 1]");
    if (clamp) {
        const auto [lo, hi] = *clamp;
        if (!(0.0 < lo && lo <= hi && hi < 1.0))
            throw ArgumentError("clamp must satisfy 0 < lo <= hi < 1");
    }
    if (fitness_traces < 1 || fitness_repetitions < 1)
        throw ArgumentError("fitness budget must be at least 1 trace and 1 repetition");
    if (poi_penalty < 0.0)
        throw ArgumentError("poi_penalty must be non-negative");
}

std::pair<double, double> UmdaConfig::clamp_bounds(std::size_t genome_length) const {
    if (clamp)
        return *clamp;
    const double L = static_cast<double>(genome_length);
    if (genome_length < 2)
        return {0.5, 0.5};
    return {1.0 / L, 1.0 - 1.0 / L};
}

UmdaConfig umda_config_from_json(const nlohmann::json &j) {
    UmdaConfig cfg;
    try {
        if (j.contains("population_size"))
            cfg.population_size = j.at("population_size").get<std::size_t>();
        if (j.contains("selection_size"))
            cfg.selection_size = j.at("selection_size").get<std::size_t>();
        if (j.contains("max_generations"))
            cfg.max_generations = j.at("max_generations").get<std::size_t>();
        if (j.contains("stagnation_limit"))
            cfg.stagnation_limit = j.at("stagnation_limit").get<std::size_t>();
        if (j.contains("init")) {
            const auto &init = j.at("init");
            const auto kind = init.at("kind").get<std::string>();
            if (kind == "uniform")
                cfg.init.kind = UmdaInitKind::uniform;
            else if (kind == "correlation_weighted")
                cfg.init.kind = UmdaInitKind::correlation_weighted;
            else
                throw ArgumentError("unknown init kind '" + kind + "'");
            if (init.contains("p0"))
                cfg.init.p0 = init.at("p0").get<double>();
        }
        if (j.contains("clamp") && !j.at("clamp").is_null()) {
            const auto bounds = j.at("clamp").get<std::vector<double>>();
            if (bounds.size() != 2)
                throw ArgumentError("clamp must be [lo, hi]");
            cfg.clamp = {bounds[0], bounds[1]};
        }
        if (j.contains("fitness_traces"))
            cfg.fitness_traces = j.at("fitness_traces").get<std::size_t>();
        if (j.contains("fitness_repetitions"))
            cfg.fitness_repetitions = j.at("fitness_repetitions").get<std::size_t>();
        if (j.contains("seed"))
            cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("max_poi") && !j.at("max_poi").is_null())
            cfg.max_poi = j.at("max_poi").get<std::size_t>();
        if (j.contains("poi_penalty"))
            cfg.poi_penalty = j.at("poi_penalty").get<double>();
    } catch (const nlohmann::json::exception &e) {
        throw ArgumentError(std::string("bad UMDA config: ") + e.what());
    }
    return cfg;
}

nlohmann::json umda_config_to_json(const UmdaConfig &cfg) {
    nlohmann::json j;
    j["population_size"] = cfg.population_size;
    j["selection_size"] = cfg.selection_size;
    j["max_generations"] = cfg.max_generations;
    j["stagnation_limit"] = cfg.stagnation_limit;
    j["init"] = {{"kind", cfg.init.kind == UmdaInitKind::uniform ? "uniform"
                                                                 : "correlation_weighted"},
                 {"p0", cfg.init.p0}};
    j["clamp"] = cfg.clamp ? nlohmann::json({cfg.clamp->first, cfg.clamp->second})
                           : nlohmann::json();
    j["fitness_traces"] = cfg.fitness_traces;
    j["fitness_repetitions"] = cfg.fitness_repetitions;
    j["seed"] = cfg.seed;
    j["max_poi"] = cfg.max_poi ? nlohmann::json(*cfg.max_poi) : nlohmann::json();
    j["poi_penalty"] = cfg.poi_penalty;
    return j;
}

UmdaState init_population(const UmdaConfig &cfg, const std::optional<PoiScores> &scores,
                          std::size_t n_samples) {
    cfg.validate();
    if (n_samples < 1)
        throw ArgumentError("genome length must be at least 1");
    const auto [lo, hi] = cfg.clamp_bounds(n_samples);

    UmdaState state;
    state.marginals.assign(n_samples, 0.0);
    if (cfg.init.kind == UmdaInitKind::uniform) {
        for (double &m : state.marginals)
            m = std::clamp(cfg.init.p0, lo, hi);
    } else {
        if (!scores)
            throw ArgumentError("correlation-weighted init requires POI scores");
        if (scores->scores.size() != n_samples)
            throw ArgumentError("POI scores length does not match genome length");
        const double mean =
            std::accumulate(scores->scores.begin(), scores->scores.end(), 0.0) /
            static_cast<double>(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double weighted = mean > 0.0 ? cfg.init.p0 * scores->scores[i] / mean
                                               : cfg.init.p0;
            state.marginals[i] = std::clamp(weighted, lo, hi);
        }
    }
    state.population =
        sample_population(state.marginals, cfg.population_size, derive_seed(cfg.seed, kInitStream));
    state.fitness.assign(cfg.population_size, 0.0);
    return state;
}

std::vector<std::size_t> select_truncation(const UmdaState &state, std::size_t N) {
    if (N >= state.population.size())
        throw ArgumentError("selection size must be smaller than the population");
    std::vector<std::size_t> order(state.population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return state.fitness[a] < state.fitness[b];
    });
    order.resize(N);
    return order;
}

std::vector<double> estimate_marginals(const std::vector<PoiCandidate> &selected,
                                       std::pair<double, double> clamp) {
    if (selected.empty())
        throw ArgumentError("cannot estimate marginals from an empty selection");
    const std::size_t length = selected.front().size();
    for (const auto &c : selected)
        if (c.size() != length)
            throw ArgumentError("selected genomes have differing lengths");

    std::vector<double> marginals(length, 0.0);
    for (const auto &c : selected)
        for (std::size_t i = 0; i < length; ++i)
            marginals[i] += c.test(i) ? 1.0 : 0.0;
    for (double &m : marginals)
        m = std::clamp(m / static_cast<double>(selected.size()), clamp.first, clamp.second);
    return marginals;
}

std::vector<PoiCandidate> sample_population(const std::vector<double> &marginals, std::size_t R,
                                            std::uint64_t seed) {
    for (double m : marginals)
        if (m < 0.0 || m > 1.0)
            throw ArgumentError("marginals must be probabilities");
    const std::size_t argmax = static_cast<std::size_t>(
        std::max_element(marginals.begin(), marginals.end()) - marginals.begin());

    std::vector<PoiCandidate> population;
    population.reserve(R);
    for (std::size_t i = 0; i < R; ++i) {
        SeededRng rng(derive_seed(seed, i));
        std::vector<std::uint8_t> bits(marginals.size(), 0);
        bool any = false;
        for (std::size_t j = 0; j < marginals.size(); ++j) {
            if (rng.uniform_double() < marginals[j]) {
                bits[j] = 1;
                any = true;
            }
        }
        if (!any)
            bits[argmax] = 1;
        population.emplace_back(std::move(bits));
    }
    return population;
}

double auc_fitness(const GeCurve &curve, double poi_penalty, std::optional<std::size_t> max_poi,
                   std::size_t selected_count) {
    double area = 0.0;
    for (double v : curve.mean_rank)
        area += v;
    double fitness = area / static_cast<double>(curve.mean_rank.size());
    if (max_poi && selected_count > *max_poi)
        fitness += poi_penalty * static_cast<double>(selected_count - *max_poi);
    return fitness;
}

double evaluate_fitness(const PoiCandidate &candidate, const TraceSet &profiling,
                        const TraceSet &validation, const UmdaConfig &cfg,
                        const AttackFitnessOptions &opts, std::uint64_t eval_seed) {
    if (candidate.selected_count() < 1)
        throw ArgumentError("candidate selects no samples");
    try {
        const auto labels = label_traces(profiling, opts.leakage_model);
        const TemplateModel model = build_templates(profiling, labels, candidate,
                                                    opts.leakage_model, opts.pooled, opts.epsilon);
        const GeCurve curve = guessing_entropy(model, validation, cfg.fitness_traces,
                                               cfg.fitness_repetitions, eval_seed);
        return auc_fitness(curve, cfg.poi_penalty, cfg.max_poi, candidate.selected_count());
    } catch (const InsufficientDataError &) {
        return kFailedFitness;
    } catch (const ConditioningError &) {
        return kFailedFitness;
    }
}

FitnessFn make_attack_fitness(const TraceSet &profiling, const TraceSet &validation,
                              const UmdaConfig &cfg, const AttackFitnessOptions &opts) {
    return [&profiling, &validation, cfg, opts](const PoiCandidate &candidate,
                                                std::uint64_t eval_seed) {
        return evaluate_fitness(candidate, profiling, validation, cfg, opts, eval_seed);
    };
}

UmdaResult run_umda(const UmdaConfig &cfg, std::size_t n_samples, const FitnessFn &fitness,
                    const std::optional<PoiScores> &scores, unsigned threads) {
    UmdaState state = init_population(cfg, scores, n_samples);
    const auto clamp = cfg.clamp_bounds(n_samples);

    UmdaResult result;
    std::size_t stagnant = 0;

    for (std::size_t gen = 1; gen <= cfg.max_generations; ++gen) {
        state.generation = gen;
        parallel_for(state.population.size(), threads, [&](std::size_t i) {
            state.fitness[i] =
                fitness(state.population[i], derive_seed(cfg.seed, kEvalStream, gen, i));
        });

        double sum = 0.0;
        std::size_t gen_best = 0;
        for (std::size_t i = 0; i < state.fitness.size(); ++i) {
            sum += state.fitness[i];
            if (state.fitness[i] < state.fitness[gen_best])
                gen_best = i;
        }
        if (!state.has_best || state.fitness[gen_best] < state.best_fitness) {
            state.best_fitness = state.fitness[gen_best];
            state.best_candidate = state.population[gen_best];
            state.has_best = true;
            stagnant = 0;
        } else {
            ++stagnant;
        }
        result.history.push_back(
            {gen, state.best_fitness, sum / static_cast<double>(state.fitness.size())});

        if (gen == cfg.max_generations || stagnant >= cfg.stagnation_limit)
            break;

        const auto selected_idx = select_truncation(state, cfg.selection_size);
        std::vector<PoiCandidate> selected;
        selected.reserve(selected_idx.size());
        for (std::size_t i : selected_idx)
            selected.push_back(state.population[i]);
        state.marginals = estimate_marginals(selected, clamp);
        state.population = sample_population(state.marginals, cfg.population_size,
                                             derive_seed(cfg.seed, kSampleStream, gen));
        state.population[0] = state.best_candidate; // elitism
    }

    result.best = state.best_candidate;
    result.best_fitness = state.best_fitness;
    result.final_marginals = state.marginals;
    return result;
}

UmdaResult run_umda(const TraceSet &profiling, const TraceSet &validation, const UmdaConfig &cfg,
                    const AttackFitnessOptions &opts, const std::optional<PoiScores> &scores,
                    unsigned threads) {
    return run_umda(cfg, profiling.n_samples(), make_attack_fitness(profiling, validation, cfg, opts),
                    scores, threads);
}

void save_history_csv(const std::vector<GenerationRecord> &history, const std::string &path,
                      const std::string &comment) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    if (!comment.empty())
        os << "# " << comment << '\n';
    os << "generation,best_fitness,mean_fitness\n";
    char buf[96];
    for (const auto &rec : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g\n", rec.generation, rec.best_fitness,
                      rec.mean_fitness);
        os << buf;
    }
}

void save_marginals_csv(const std::vector<double> &marginals, const std::string &path,
                        const std::string &comment) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    if (!comment.empty())
        os << "# " << comment << '\n';
    os << "index,probability\n";
    char buf[64];
    for (std::size_t i = 0; i < marginals.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", i, marginals[i]);
        os << buf;
    }
}

} // namespace sca
