#pragma once
// Path metrics and the baseline / safe / dangerous scenario comparison.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptnav/bayes.hpp"
#include "promptnav/planner.hpp"
#include "promptnav/scene.hpp"
#include "promptnav/sentiment.hpp"

namespace promptnav {

/// Sum of step lengths: res per orthogonal step, sqrt(2) * res per diagonal step.
double path_length(const PathResult& path, double resolution);

/// Minimum center-to-center distance from any path cell to any blocked cell;
/// nullopt when the grid has no blocked cells.
std::optional<double> min_dist_to_obstacles(const PathResult& path, const OccupancyGrid& grid);

struct ScenarioRow {
    std::string name;
    std::optional<std::string> prompt;
    PathResult path;
    double path_length_m = 0.0;
    std::optional<double> mdo_m;
    FamilyValues posteriors;
};

struct ScenarioReport {
    std::vector<ScenarioRow> rows;
    CostMode cost_mode = CostMode::CostAugmented;
    std::string provider;

    const ScenarioRow& row(const std::string& name) const;
    nlohmann::json to_json(double resolution) const;
    std::string render_table() const;
};

struct ScenarioPrompts {
    std::string safe;
    std::string dangerous;
};

/// Injection settings used to turn posteriors into a field.
struct FieldInjection {
    double k_global = kDefaultKGlobal;
    double d_max = FieldParams::kDefaultDmax;
    FieldMode mode = FieldMode::ScaleKrep;
};

PotentialGrid field_for_store(const CoefficientStore& store, const OccupancyGrid& grid,
                              const FieldInjection& injection = {});

/// Planner settings for the comparison: cost-augmented MHA* by default.
PlannerParams default_comparison_params();

/// Three rows in fixed order: Baseline (A*, no prompt), Safe, Dangerous. The
/// prompted rows each start from the same priors. `priors` overrides the
/// provider's prior estimate when given.
ScenarioReport compare_scenarios(const SceneSpec& spec, const ScenarioPrompts& prompts, SentimentProvider& provider,
                                 const PlannerParams& params = default_comparison_params(),
                                 const std::optional<FamilyValues>& priors = std::nullopt,
                                 const FieldInjection& injection = {});
ScenarioReport compare_scenarios(const SceneSpec& spec, const ScenarioPrompts& prompts, const ProviderConfig& config,
                                 const PlannerParams& params = default_comparison_params(),
                                 const std::optional<FamilyValues>& priors = std::nullopt,
                                 const FieldInjection& injection = {});

}  // namespace promptnav
