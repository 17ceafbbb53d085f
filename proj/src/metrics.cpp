#include "promptnav/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "promptnav/errors.hpp"

namespace promptnav {

namespace {

// Re-raise the in-flight library error with the scenario name prepended, keeping its type.
[[noreturn]] void rethrow_tagged(const std::string& row) {
    const std::string tag = row + ": ";
    try {
        throw;
    } catch (const NoPathError& e) {
        throw NoPathError(tag + e.what());
    } catch (const PlannerError& e) {
        throw PlannerError(tag + e.what());
    } catch (const TransportError& e) {
        throw TransportError(tag + e.what(), e.raw_reply());
    } catch (const ReplyError& e) {
        throw ReplyError(tag + e.what(), e.raw_reply());
    } catch (const ProviderError& e) {
        throw ProviderError(tag + e.what(), e.raw_reply());
    } catch (const BayesError& e) {
        throw BayesError(tag + e.what());
    } catch (const FieldError& e) {
        throw FieldError(tag + e.what());
    }
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

double path_length(const PathResult& path, double resolution) { return chain_length(path.cells, resolution); }

std::optional<double> min_dist_to_obstacles(const PathResult& path, const OccupancyGrid& grid) {
    std::optional<double> best;
    for (const Cell& c : path.cells) {
        const auto d = min_distance_any(grid.index(c), grid);
        if (!d) return std::nullopt;
        if (!best || *d < *best) best = d;
    }
    return best;
}

const ScenarioRow& ScenarioReport::row(const std::string& name) const {
    for (const ScenarioRow& r : rows) {
        if (r.name == name) return r;
    }
    throw Error("no scenario row named \"" + name + "\"");
}

nlohmann::json ScenarioReport::to_json(double resolution) const {
    nlohmann::json out_rows = nlohmann::json::array();
    for (const ScenarioRow& r : rows) {
        out_rows.push_back({{"strategy", r.name},
                            {"prompt", r.prompt ? nlohmann::json(*r.prompt) : nlohmann::json(nullptr)},
                            {"path_length_m", r.path_length_m},
                            {"mdo_m", r.mdo_m ? nlohmann::json(*r.mdo_m) : nlohmann::json(nullptr)},
                            {"expansions", r.path.expansions},
                            {"posteriors", r.posteriors},
                            {"path", path_to_json(r.path, resolution)}});
    }
    return {{"cost_mode", to_string(cost_mode)}, {"provider", provider}, {"rows", out_rows}};
}

std::string ScenarioReport::render_table() const {
    std::ostringstream out;
    out << "Strategy    Path Length(m)  MDO(m)  Expansions\n";
    for (const ScenarioRow& r : rows) {
        std::string name = r.name;
        name.resize(12, ' ');
        std::string len = fixed(r.path_length_m, 3);
        len.resize(16, ' ');
        std::string mdo = r.mdo_m ? fixed(*r.mdo_m, 2) : "-";
        mdo.resize(8, ' ');
        out << name << len << mdo << r.path.expansions << "\n";
    }
    out << "(cost mode: " << to_string(cost_mode) << ", provider: " << provider << ")\n";
    return out.str();
}

PotentialGrid field_for_store(const CoefficientStore& store, const OccupancyGrid& grid,
                              const FieldInjection& injection) {
    return build_field(grid, to_field_params(store, grid, injection.k_global, injection.d_max, injection.mode));
}

PlannerParams default_comparison_params() {
    PlannerParams p;
    p.cost_mode = CostMode::CostAugmented;
    return p;
}

ScenarioReport compare_scenarios(const SceneSpec& spec, const ScenarioPrompts& prompts, SentimentProvider& provider,
                                 const PlannerParams& params, const std::optional<FamilyValues>& priors,
                                 const FieldInjection& injection) {
    params.validate();
    const OccupancyGrid grid = rasterize(spec);
    const Cell start = spec.cell_of(spec.start);
    const Cell goal = spec.cell_of(spec.goal);
    const std::vector<std::string> families = spec.families();

    CoefficientStore initial;
    try {
        initial = init_priors(families, priors ? *priors : provider.estimate_priors(families));
    } catch (...) {
        rethrow_tagged("Priors");
    }

    ScenarioReport report;
    report.cost_mode = params.cost_mode;
    report.provider = provider.tag();

    try {
        ScenarioRow row;
        row.name = "Baseline";
        row.path = astar_baseline(grid, start, goal);
        row.path_length_m = path_length(row.path, grid.resolution());
        row.mdo_m = min_dist_to_obstacles(row.path, grid);
        row.posteriors = initial.posteriors();
        report.rows.push_back(std::move(row));
    } catch (...) {
        rethrow_tagged("Baseline");
    }

    const std::pair<const char*, const std::string*> prompted[] = {{"Safe", &prompts.safe},
                                                                   {"Dangerous", &prompts.dangerous}};
    for (const auto& [name, prompt] : prompted) {
        try {
            const CoefficientStore store = apply_prompt(initial, *prompt, provider);
            const PotentialGrid field = field_for_store(store, grid, injection);
            ScenarioRow row;
            row.name = name;
            row.prompt = *prompt;
            row.path = mha_star(grid, field, start, goal, params);
            row.path_length_m = path_length(row.path, grid.resolution());
            row.mdo_m = min_dist_to_obstacles(row.path, grid);
            row.posteriors = store.posteriors();
            report.rows.push_back(std::move(row));
        } catch (...) {
            rethrow_tagged(name);
        }
    }
    return report;
}

ScenarioReport compare_scenarios(const SceneSpec& spec, const ScenarioPrompts& prompts, const ProviderConfig& config,
                                 const PlannerParams& params, const std::optional<FamilyValues>& priors,
                                 const FieldInjection& injection) {
    auto provider = make_provider(config);
    return compare_scenarios(spec, prompts, *provider, params, priors, injection);
}

}  // namespace promptnav
