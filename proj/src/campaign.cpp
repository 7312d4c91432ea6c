#include "sca/campaign.hpp"

#include "sca/errors.hpp"
#include "sca/metrics.hpp"
#include "sca/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace sca {

namespace {

// Streams under the campaign seed; every random process derives from the
// top-level seed through exactly one of these.
constexpr std::uint64_t kSimStream = 101;
constexpr std::uint64_t kSplitStream = 102;
constexpr std::uint64_t kEvalStream = 103;
constexpr std::uint64_t kUmdaStream = 104;
constexpr std::uint64_t kConfirmStream = 105;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

PoiLabelSource poi_label_source_from_name(const std::string &name) {
    if (name == "attack")
        return PoiLabelSource::attack;
    if (name == "masked_value")
        return PoiLabelSource::masked_value;
    if (name == "mask")
        return PoiLabelSource::mask;
    throw ArgumentError("unknown POI label source '" + name + "'");
}

std::string poi_label_source_name(PoiLabelSource s) {
    switch (s) {
    case PoiLabelSource::attack:
        return "attack";
    case PoiLabelSource::masked_value:
        return "masked_value";
    case PoiLabelSource::mask:
        return "mask";
    }
    return "attack";
}

PoiSelectionSpec poi_spec_from_json(const nlohmann::json &j) {
    PoiSelectionSpec spec;
    try {
        const auto method = j.value("method", std::string("abs_pearson"));
        if (method == "explicit") {
            spec.is_explicit = true;
            spec.positions = j.at("positions").get<std::vector<std::size_t>>();
            if (spec.positions.empty())
                throw ArgumentError("explicit POI selection needs positions");
        } else {
            spec.method = poi_method_from_name(method);
            spec.k = j.value("k", std::size_t{5});
            spec.min_spacing = j.value("min_spacing", std::size_t{1});
            spec.labels = poi_label_source_from_name(j.value("labels", std::string("attack")));
            if (spec.k < 1)
                throw ArgumentError("POI k must be at least 1");
        }
    } catch (const nlohmann::json::exception &e) {
        throw ArgumentError(std::string("bad POI config: ") + e.what());
    }
    return spec;
}

nlohmann::json poi_spec_to_json(const PoiSelectionSpec &spec) {
    nlohmann::json j;
    if (spec.is_explicit) {
        j["method"] = "explicit";
        j["positions"] = spec.positions;
    } else {
        j["method"] = poi_method_name(spec.method);
        j["k"] = spec.k;
        j["min_spacing"] = spec.min_spacing;
        j["labels"] = poi_label_source_name(spec.labels);
    }
    return j;
}

std::vector<PoiSelectionSpec> poi_specs_from_json(const nlohmann::json &j) {
    std::vector<PoiSelectionSpec> specs;
    if (j.is_array()) {
        for (const auto &item : j)
            specs.push_back(poi_spec_from_json(item));
    } else {
        specs.push_back(poi_spec_from_json(j));
    }
    if (specs.empty())
        throw ArgumentError("POI config must contain at least one selection");
    return specs;
}

nlohmann::json poi_specs_to_json(const std::vector<PoiSelectionSpec> &specs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &s : specs)
        arr.push_back(poi_spec_to_json(s));
    return arr;
}

TemplateOptions template_options_from_json(const nlohmann::json &j) {
    TemplateOptions t;
    try {
        t.pooled = j.value("pooled", true);
        t.epsilon = j.value("epsilon", 1e-6);
        t.save_model = j.value("save_model", false);
        if (t.epsilon < 0.0)
            throw ArgumentError("epsilon must be non-negative");
    } catch (const nlohmann::json::exception &e) {
        throw ArgumentError(std::string("bad template config: ") + e.what());
    }
    return t;
}

nlohmann::json template_options_to_json(const TemplateOptions &t) {
    return {{"pooled", t.pooled}, {"epsilon", t.epsilon}, {"save_model", t.save_model}};
}

DataSource data_source_from_json(const nlohmann::json &j, const fs::path &config_dir) {
    DataSource src;
    if (j.contains("traces") && !j.at("traces").is_null()) {
        fs::path p = j.at("traces").get<std::string>();
        if (p.is_relative())
            p = config_dir / p;
        src.traces_path = p.string();
    }
    if (j.contains("sim") && !j.at("sim").is_null()) {
        const auto &sim = j.at("sim");
        src.sim = sim_config_from_json(sim);
        src.sim_scheme = scheme_from_name(sim.value("scheme", std::string("unprotected")));
        src.has_sim = true;
    }
    if (src.traces_path && src.has_sim)
        throw ArgumentError("give either 'traces' or 'sim', not both");
    return src;
}

nlohmann::json data_source_to_json(const DataSource &src) {
    nlohmann::json j;
    if (src.traces_path)
        j["traces"] = *src.traces_path;
    if (src.has_sim) {
        j["sim"] = sim_config_to_json(*src.sim);
        j["sim"]["scheme"] = scheme_name(src.sim_scheme);
    }
    return j;
}

// Fills the sim seed from the campaign seed when the config left it unset.
SimConfig resolve_sim_seed(SimConfig sim, bool seed_was_set, std::uint64_t campaign_seed) {
    if (!seed_was_set)
        sim.seed = derive_seed(campaign_seed, kSimStream);
    return sim;
}

TraceSet resolve_dataset(const DataSource &src) {
    if (src.traces_path)
        return load_traceset(*src.traces_path);
    if (src.has_sim)
        return simulate(*src.sim, src.sim_scheme);
    throw ArgumentError("no data source: configure 'traces' or 'sim'");
}

struct Splits {
    TraceSet profiling;
    std::optional<TraceSet> validation;
    TraceSet attack_pool;
};

Splits split_dataset(const TraceSet &ts, const SplitConfig &split, std::uint64_t campaign_seed,
                     bool need_validation) {
    const std::size_t n_prof = split.n_profiling;
    const std::size_t n_val = need_validation ? split.n_validation : 0;
    if (n_prof < 1)
        throw ArgumentError("split.n_profiling must be at least 1");
    if (need_validation && n_val < 1)
        throw ArgumentError("split.n_validation must be at least 1 for the EDA search");
    if (n_prof + n_val >= ts.n_traces())
        throw ArgumentError("splits leave no traces for the attack pool");

    const std::uint64_t seed = derive_seed(campaign_seed, kSplitStream);
    auto [head, attack_pool] = split_traceset(ts, n_prof + n_val, seed);
    if (n_val == 0)
        return {std::move(head), std::nullopt, std::move(attack_pool)};
    auto [profiling, validation] = split_traceset(head, n_prof, derive_seed(seed, 1));
    return {std::move(profiling), std::move(validation), std::move(attack_pool)};
}

std::vector<std::uint8_t> poi_labels(const TraceSet &ts, LeakageModel model,
                                     PoiLabelSource source) {
    if (source == PoiLabelSource::attack)
        return label_traces(ts, model);
    if (!ts.masks())
        throw ArgumentError("mask-derived POI labels need mask metadata");
    const auto &masks = *ts.masks();
    std::vector<std::uint8_t> labels(ts.n_traces());
    for (std::size_t i = 0; i < ts.n_traces(); ++i) {
        const std::uint8_t v = compute_intermediate(ts.plaintexts()[i], ts.keys()[i]);
        const std::uint8_t value = source == PoiLabelSource::masked_value
                                       ? static_cast<std::uint8_t>(v ^ masks[i])
                                       : masks[i];
        labels[i] = leakage_label(model, value);
    }
    return labels;
}

// Union of the configured selections; also returns the first computed score
// vector for the diagnostics CSV.
PoiCandidate select_pois(const std::vector<PoiSelectionSpec> &specs, const TraceSet &profiling,
                         LeakageModel model, std::optional<PoiScores> *first_scores) {
    if (specs.empty())
        throw ArgumentError("POI config must contain at least one selection");
    std::vector<std::uint8_t> bits(profiling.n_samples(), 0);
    for (const auto &spec : specs) {
        PoiCandidate picked;
        if (spec.is_explicit) {
            picked = PoiCandidate::from_indices(profiling.n_samples(), spec.positions);
        } else {
            const auto labels = poi_labels(profiling, model, spec.labels);
            const PoiScores scores = spec.method == PoiMethod::abs_pearson
                                         ? correlation_ranking(profiling, labels)
                                         : snr_ranking(profiling, labels);
            picked = select_top_k(scores, spec.k, spec.min_spacing);
            if (first_scores && !first_scores->has_value())
                *first_scores = scores;
        }
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (picked.test(i))
                bits[i] = 1;
    }
    PoiCandidate result((std::vector<std::uint8_t>(bits)));
    if (result.selected_count() < 1)
        throw ArgumentError("POI selection is empty");
    return result;
}

fs::path ensure_out_dir(const CampaignConfig &cfg) {
    fs::path dir = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_summary(const fs::path &path, const nlohmann::json &summary) {
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path.string() + "' for writing");
    os << summary.dump(2) << '\n';
}

struct AttackOutcome {
    GeCurve curve;
    std::size_t n_poi = 0;
    std::vector<std::size_t> poi_indices;
    std::optional<std::size_t> q;
    double final_mean_rank = 0.0;
    bool low_data_warning = false;
    std::optional<TemplateModel> model;
};

AttackOutcome run_template_attack(const TraceSet &profiling, const TraceSet &attack_pool,
                                  const std::vector<PoiSelectionSpec> &specs,
                                  const TemplateOptions &templ, LeakageModel model,
                                  const EvaluationConfig &eval, std::uint64_t campaign_seed,
                                  unsigned threads, std::optional<PoiScores> *first_scores) {
    const PoiCandidate poi = select_pois(specs, profiling, model, first_scores);
    const auto labels = label_traces(profiling, model);

    AttackOutcome out;
    out.model.emplace(build_templates(profiling, labels, poi, model, templ.pooled, templ.epsilon));
    out.curve = guessing_entropy(*out.model, attack_pool, eval.attack_traces, eval.repetitions,
                                 derive_seed(campaign_seed, kEvalStream), threads);
    out.n_poi = out.model->trainable_parameters();
    out.poi_indices = poi.indices();
    out.q = q_tge(out.curve);
    out.final_mean_rank = out.curve.mean_rank.back();
    out.low_data_warning = out.model->low_data_warning();
    return out;
}

} // namespace

CampaignConfig load_campaign_config(const std::string &path, const CliOverrides &overrides) {
    if (!fs::exists(path))
        throw ArgumentError("config file '" + path + "' does not exist");
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error &e) {
        throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
    }

    const fs::path config_dir = fs::path(path).parent_path();
    CampaignConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.out_dir = j.value("out_dir", std::string("."));
        cfg.threads = j.value("threads", 1u);
        cfg.data = data_source_from_json(j, config_dir);
        cfg.leakage_model =
            leakage_model_from_name(j.value("leakage_model", std::string("hamming_weight")));
        if (j.contains("split")) {
            cfg.split.n_profiling = j.at("split").value("n_profiling", std::size_t{0});
            cfg.split.n_validation = j.at("split").value("n_validation", std::size_t{0});
        }
        if (j.contains("poi"))
            cfg.poi = poi_specs_from_json(j.at("poi"));
        else
            cfg.poi.push_back(PoiSelectionSpec{});
        if (j.contains("template"))
            cfg.templ = template_options_from_json(j.at("template"));
        if (j.contains("evaluation")) {
            cfg.evaluation.attack_traces =
                j.at("evaluation").value("attack_traces", std::size_t{100});
            cfg.evaluation.repetitions = j.at("evaluation").value("repetitions", std::size_t{10});
            if (cfg.evaluation.attack_traces < 1 || cfg.evaluation.repetitions < 1)
                throw ArgumentError("evaluation needs at least 1 trace and 1 repetition");
        }
        if (j.contains("umda") && !j.at("umda").is_null())
            cfg.umda = umda_config_from_json(j.at("umda"));
        if (j.contains("traces_out"))
            cfg.traces_out = j.at("traces_out").get<std::string>();
        if (j.contains("methods")) {
            for (const auto &mj : j.at("methods")) {
                MethodConfig m;
                m.name = mj.at("name").get<std::string>();
                if (mj.contains("traces") || mj.contains("sim"))
                    m.data = data_source_from_json(mj, config_dir);
                if (mj.contains("poi"))
                    m.poi = poi_specs_from_json(mj.at("poi"));
                if (mj.contains("umda") && !mj.at("umda").is_null())
                    m.umda = umda_config_from_json(mj.at("umda"));
                if (mj.contains("template"))
                    m.templ = template_options_from_json(mj.at("template"));
                cfg.methods.push_back(std::move(m));
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw ArgumentError(std::string("bad config: ") + e.what());
    }

    if (overrides.seed)
        cfg.seed = *overrides.seed;
    if (overrides.out_dir)
        cfg.out_dir = *overrides.out_dir;
    if (overrides.threads)
        cfg.threads = *overrides.threads;
    if (cfg.threads < 1)
        cfg.threads = 1;

    // Resolve the sim seed once so artifacts record it.
    if (cfg.data.has_sim) {
        const bool seed_set = j.contains("sim") && j.at("sim").contains("seed") &&
                              !j.at("sim").at("seed").is_null();
        cfg.data.sim = resolve_sim_seed(*cfg.data.sim, seed_set, cfg.seed);
    }
    for (auto &m : cfg.methods) {
        if (m.data && m.data->has_sim) {
            // method sims default to the campaign-derived sim seed as well
            const bool seed_set = [&] {
                for (const auto &mj : j.at("methods"))
                    if (mj.at("name").get<std::string>() == m.name && mj.contains("sim"))
                        return mj.at("sim").contains("seed") && !mj.at("sim").at("seed").is_null();
                return false;
            }();
            m.data->sim = resolve_sim_seed(*m.data->sim, seed_set, cfg.seed);
        }
        if (m.data && m.data->traces_path && !fs::exists(*m.data->traces_path))
            throw ArgumentError("trace file '" + *m.data->traces_path + "' does not exist");
    }
    if (cfg.data.traces_path && !fs::exists(*cfg.data.traces_path))
        throw ArgumentError("trace file '" + *cfg.data.traces_path + "' does not exist");
    if (cfg.umda)
        cfg.umda->validate();

    // Execution-only knobs (out_dir, threads) stay out of the provenance so
    // reruns with different parallelism or destinations compare bit-equal.
    nlohmann::json prov;
    prov["seed"] = cfg.seed;
    prov["data"] = data_source_to_json(cfg.data);
    prov["leakage_model"] = leakage_model_name(cfg.leakage_model);
    prov["split"] = {{"n_profiling", cfg.split.n_profiling},
                     {"n_validation", cfg.split.n_validation}};
    prov["poi"] = poi_specs_to_json(cfg.poi);
    prov["template"] = template_options_to_json(cfg.templ);
    prov["evaluation"] = {{"attack_traces", cfg.evaluation.attack_traces},
                          {"repetitions", cfg.evaluation.repetitions}};
    if (cfg.umda)
        prov["umda"] = umda_config_to_json(*cfg.umda);
    if (!cfg.methods.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &m : cfg.methods) {
            nlohmann::json mj;
            mj["name"] = m.name;
            if (m.data)
                mj["data"] = data_source_to_json(*m.data);
            if (m.poi)
                mj["poi"] = poi_specs_to_json(*m.poi);
            if (m.umda)
                mj["umda"] = umda_config_to_json(*m.umda);
            if (m.templ)
                mj["template"] = template_options_to_json(*m.templ);
            arr.push_back(std::move(mj));
        }
        prov["methods"] = std::move(arr);
    }
    cfg.provenance = std::move(prov);
    return cfg;
}

void cmd_simulate(const CampaignConfig &cfg) {
    if (!cfg.data.has_sim)
        throw ArgumentError("simulate needs a 'sim' block");
    const fs::path dir = ensure_out_dir(cfg);
    const TraceSet ts = simulate(*cfg.data.sim, cfg.data.sim_scheme);
    const fs::path out = dir / cfg.traces_out;
    save_traceset(ts, out.string());
    std::cout << "wrote " << out.string() << ": " << ts.n_traces() << " traces, "
              << ts.n_samples() << " samples, scheme " << scheme_name(ts.scheme()) << "\n";
}

void cmd_attack(const CampaignConfig &cfg) {
    const fs::path dir = ensure_out_dir(cfg);
    const TraceSet ts = resolve_dataset(cfg.data);
    Splits splits = split_dataset(ts, cfg.split, cfg.seed, false);

    std::optional<PoiScores> scores;
    const AttackOutcome out =
        run_template_attack(splits.profiling, splits.attack_pool, cfg.poi, cfg.templ,
                            cfg.leakage_model, cfg.evaluation, cfg.seed, cfg.threads, &scores);

    const std::string comment = "provenance " + cfg.provenance.dump();
    save_ge_curve_csv(out.curve, (dir / "ge_curve.csv").string(), comment);
    if (scores)
        save_poi_scores_csv(*scores, (dir / "poi_scores.csv").string());
    if (cfg.templ.save_model)
        save_template_model(*out.model, (dir / "template_model.json").string());

    nlohmann::json summary;
    summary["command"] = "attack";
    summary["provenance"] = cfg.provenance;
    summary["n_poi"] = out.n_poi;
    summary["poi_indices"] = out.poi_indices;
    summary["q_tge"] = out.q ? nlohmann::json(*out.q) : nlohmann::json();
    summary["final_mean_rank"] = out.final_mean_rank;
    summary["box"] = box_stats_to_json(boxplot_stats(out.curve.final_ranks));
    summary["low_data_warning"] = out.low_data_warning;
    write_summary(dir / "summary.json", summary);

    std::cout << "attack: n_poi=" << out.n_poi << " q_tge="
              << (out.q ? std::to_string(*out.q) : std::string("NA"))
              << " final_mean_rank=" << fmt_double(out.final_mean_rank) << "\n";
}

void cmd_eda_search(const CampaignConfig &cfg) {
    if (!cfg.umda)
        throw ArgumentError("eda-search needs a 'umda' block");
    const fs::path dir = ensure_out_dir(cfg);
    const TraceSet ts = resolve_dataset(cfg.data);
    Splits splits = split_dataset(ts, cfg.split, cfg.seed, true);

    UmdaConfig umda_cfg = *cfg.umda;
    umda_cfg.seed = derive_seed(cfg.seed, kUmdaStream);

    AttackFitnessOptions opts;
    opts.leakage_model = cfg.leakage_model;
    opts.pooled = cfg.templ.pooled;
    opts.epsilon = cfg.templ.epsilon;

    std::optional<PoiScores> scores;
    if (umda_cfg.init.kind == UmdaInitKind::correlation_weighted) {
        const auto labels = label_traces(splits.profiling, cfg.leakage_model);
        scores = correlation_ranking(splits.profiling, labels);
    }

    const UmdaResult result =
        run_umda(splits.profiling, *splits.validation, umda_cfg, opts, scores, cfg.threads);

    // Confirmation attack on the untouched attack split.
    const auto labels = label_traces(splits.profiling, cfg.leakage_model);
    const TemplateModel model = build_templates(splits.profiling, labels, result.best,
                                                cfg.leakage_model, cfg.templ.pooled,
                                                cfg.templ.epsilon);
    const GeCurve confirmation =
        guessing_entropy(model, splits.attack_pool, cfg.evaluation.attack_traces,
                         cfg.evaluation.repetitions, derive_seed(cfg.seed, kConfirmStream),
                         cfg.threads);

    const std::string comment = "provenance " + cfg.provenance.dump();
    {
        std::ofstream os(dir / "best_poi.csv", std::ios::trunc);
        if (!os)
            throw Error("cannot write best_poi.csv");
        os << "# " << comment << "\nindex\n";
        for (std::size_t i : result.best.indices())
            os << i << "\n";
    }
    save_history_csv(result.history, (dir / "history.csv").string(), comment);
    save_marginals_csv(result.final_marginals, (dir / "marginals.csv").string(), comment);
    save_ge_curve_csv(confirmation, (dir / "confirmation_ge_curve.csv").string(), comment);

    const auto q = q_tge(confirmation);
    nlohmann::json summary;
    summary["command"] = "eda-search";
    summary["provenance"] = cfg.provenance;
    summary["search_best_fitness"] = result.best_fitness;
    summary["generations"] = result.history.size();
    summary["n_poi"] = result.best.selected_count();
    summary["poi_indices"] = result.best.indices();
    summary["confirmation_q_tge"] = q ? nlohmann::json(*q) : nlohmann::json();
    summary["confirmation_final_mean_rank"] = confirmation.mean_rank.back();
    summary["confirmation_box"] = box_stats_to_json(boxplot_stats(confirmation.final_ranks));
    write_summary(dir / "summary.json", summary);

    std::cout << "eda-search: best_fitness=" << fmt_double(result.best_fitness)
              << " n_poi=" << result.best.selected_count() << " confirmation_q_tge="
              << (q ? std::to_string(*q) : std::string("NA")) << "\n";
}

void cmd_evaluate(const CampaignConfig &cfg) {
    if (cfg.methods.empty())
        throw ArgumentError("evaluate needs a non-empty 'methods' list");
    const fs::path dir = ensure_out_dir(cfg);

    struct Row {
        std::string name;
        std::size_t n_poi;
        std::optional<std::size_t> q;
        double final_mean_rank;
    };
    std::vector<Row> rows;
    nlohmann::json details = nlohmann::json::array();

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const MethodConfig &m = cfg.methods[mi];
        const DataSource &data = m.data ? *m.data : cfg.data;
        const TemplateOptions &templ = m.templ ? *m.templ : cfg.templ;
        const TraceSet ts = resolve_dataset(data);

        Row row;
        row.name = m.name;
        nlohmann::json detail;
        detail["name"] = m.name;

        if (m.umda) {
            Splits splits = split_dataset(ts, cfg.split, cfg.seed, true);
            UmdaConfig umda_cfg = *m.umda;
            umda_cfg.seed = derive_seed(cfg.seed, kUmdaStream, mi);
            AttackFitnessOptions opts{cfg.leakage_model, templ.pooled, templ.epsilon};
            std::optional<PoiScores> scores;
            if (umda_cfg.init.kind == UmdaInitKind::correlation_weighted) {
                const auto labels = label_traces(splits.profiling, cfg.leakage_model);
                scores = correlation_ranking(splits.profiling, labels);
            }
            const UmdaResult result = run_umda(splits.profiling, *splits.validation, umda_cfg,
                                               opts, scores, cfg.threads);
            const auto labels = label_traces(splits.profiling, cfg.leakage_model);
            const TemplateModel model =
                build_templates(splits.profiling, labels, result.best, cfg.leakage_model,
                                templ.pooled, templ.epsilon);
            const GeCurve curve = guessing_entropy(
                model, splits.attack_pool, cfg.evaluation.attack_traces,
                cfg.evaluation.repetitions, derive_seed(cfg.seed, kEvalStream), cfg.threads);
            row.n_poi = result.best.selected_count();
            row.q = q_tge(curve);
            row.final_mean_rank = curve.mean_rank.back();
            detail["search_best_fitness"] = result.best_fitness;
            detail["poi_indices"] = result.best.indices();
        } else {
            Splits splits = split_dataset(ts, cfg.split, cfg.seed, false);
            const auto &specs = m.poi ? *m.poi : cfg.poi;
            std::optional<PoiScores> scores;
            const AttackOutcome out = run_template_attack(
                splits.profiling, splits.attack_pool, specs, templ, cfg.leakage_model,
                cfg.evaluation, cfg.seed, cfg.threads, &scores);
            row.n_poi = out.n_poi;
            row.q = out.q;
            row.final_mean_rank = out.final_mean_rank;
            detail["poi_indices"] = out.poi_indices;
        }
        detail["n_poi"] = row.n_poi;
        detail["q_tge"] = row.q ? nlohmann::json(*row.q) : nlohmann::json();
        detail["final_mean_rank"] = row.final_mean_rank;
        details.push_back(std::move(detail));
        rows.push_back(std::move(row));
    }

    {
        std::ofstream os(dir / "comparison.csv", std::ios::trunc);
        if (!os)
            throw Error("cannot write comparison.csv");
        os << "# provenance " << cfg.provenance.dump() << "\n";
        os << "method,n_poi,q_tge,final_mean_rank\n";
        for (const auto &row : rows) {
            os << row.name << ',' << row.n_poi << ','
               << (row.q ? std::to_string(*row.q) : std::string("NA")) << ','
               << fmt_double(row.final_mean_rank) << "\n";
        }
    }
    nlohmann::json summary;
    summary["command"] = "evaluate";
    summary["provenance"] = cfg.provenance;
    summary["methods"] = details;
    write_summary(dir / "summary.json", summary);

    for (const auto &row : rows)
        std::cout << row.name << ": n_poi=" << row.n_poi << " q_tge="
                  << (row.q ? std::to_string(*row.q) : std::string("NA"))
                  << " final_mean_rank=" << fmt_double(row.final_mean_rank) << "\n";
}

int run_command(const std::string &command, const std::string &config_path,
                const CliOverrides &overrides) {
    try {
        const CampaignConfig cfg = load_campaign_config(config_path, overrides);
        if (command == "simulate")
            cmd_simulate(cfg);
        else if (command == "attack")
            cmd_attack(cfg);
        else if (command == "eda-search")
            cmd_eda_search(cfg);
        else if (command == "evaluate")
            cmd_evaluate(cfg);
        else {
            std::cerr << "error: unknown command '" << command << "'\n";
            return 2;
        }
        return 0;
    } catch (const ArgumentError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrityError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace sca
