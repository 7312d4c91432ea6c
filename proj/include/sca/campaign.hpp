#ifndef SCA_CAMPAIGN_HPP
#define SCA_CAMPAIGN_HPP

#include "sca/leakage_sim.hpp"
#include "sca/poi.hpp"
#include "sca/template_attack.hpp"
#include "sca/trace_set.hpp"
#include "sca/umda.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sca {

// Which per-trace value the POI scoring labels come from. Mask-derived
// labels need mask metadata (profiling-phase knowledge only; attacks never
// see masks).
enum class PoiLabelSource { attack, masked_value, mask };

// One scoring/selection directive; a campaign's POI set is the union of one
// or more of these.
struct PoiSelectionSpec {
    bool is_explicit = false;
    std::vector<std::size_t> positions; // explicit only
    PoiMethod method = PoiMethod::abs_pearson;
    PoiLabelSource labels = PoiLabelSource::attack;
    std::size_t k = 5;
    std::size_t min_spacing = 1;
};

struct TemplateOptions {
    bool pooled = true;
    double epsilon = 1e-6;
    bool save_model = false;
};

struct SplitConfig {
    std::size_t n_profiling = 0;
    std::size_t n_validation = 0; // eda-search only
};

struct EvaluationConfig {
    std::size_t attack_traces = 100;
    std::size_t repetitions = 10;
};

struct DataSource {
    std::optional<std::string> traces_path;
    std::optional<SimConfig> sim;
    Scheme sim_scheme = Scheme::unprotected;
    bool has_sim = false;
};

struct MethodConfig {
    std::string name;
    std::optional<DataSource> data; // falls back to the campaign source
    std::optional<std::vector<PoiSelectionSpec>> poi;
    std::optional<UmdaConfig> umda; // EDA method when present
    std::optional<TemplateOptions> templ;
};

struct CampaignConfig {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    unsigned threads = 1;
    DataSource data;
    LeakageModel leakage_model = LeakageModel::hamming_weight;
    SplitConfig split;
    std::vector<PoiSelectionSpec> poi;
    TemplateOptions templ;
    EvaluationConfig evaluation;
    std::optional<UmdaConfig> umda;
    std::vector<MethodConfig> methods;
    std::string traces_out = "traces.scat"; // simulate output, relative to out_dir

    // Resolved config without execution-only knobs; embedded in artifacts.
    nlohmann::json provenance;
};

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
};

// Parses and validates a campaign config; referenced trace files must exist.
CampaignConfig load_campaign_config(const std::string &path, const CliOverrides &overrides = {});

void cmd_simulate(const CampaignConfig &cfg);
void cmd_attack(const CampaignConfig &cfg);
void cmd_eda_search(const CampaignConfig &cfg);
void cmd_evaluate(const CampaignConfig &cfg);

// Maps exceptions to the exit-code contract: 0 success, 1 runtime/I-O
// failure, 2 configuration or validation failure.
int run_command(const std::string &command, const std::string &config_path,
                const CliOverrides &overrides);

} // namespace sca

#endif
