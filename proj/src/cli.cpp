#include "promptnav/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "promptnav/bayes.hpp"
#include "promptnav/errors.hpp"
#include "promptnav/field.hpp"
#include "promptnav/metrics.hpp"
#include "promptnav/planner.hpp"
#include "promptnav/scene.hpp"
#include "promptnav/sentiment.hpp"
#include "promptnav/service.hpp"

namespace promptnav::cli {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json(const std::string& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) throw Error(path + " is not valid JSON");
    return doc;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
    if (!out) throw Error("cannot write " + path);
}

struct ProviderOptions {
    std::string kind = "lexicon";
    std::string lexicon_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--provider", kind, "Sentiment provider")->check(CLI::IsMember({"lexicon", "remote"}));
        cmd->add_option("--lexicon", lexicon_path, "JSON file overriding the lexicon word lists / priors");
    }

    ProviderConfig config() const {
        ProviderConfig cfg = ProviderConfig::from_env(provider_kind_from_string(kind));
        if (!lexicon_path.empty()) cfg.lexicon = Lexicon::from_json(read_json(lexicon_path));
        return cfg;
    }
};

struct FieldOptions {
    double k_global = kDefaultKGlobal;
    double d_max = FieldParams::kDefaultDmax;
    std::string mode = "scale_krep";

    void attach(CLI::App* cmd) {
        cmd->add_option("--k-global", k_global, "Repulsion scale for posterior 1.0");
        cmd->add_option("--d-max", d_max, "Potential cutoff distance (m)");
        cmd->add_option("--field-mode", mode, "Posterior injection")->check(CLI::IsMember({"scale_krep", "scale_dmax"}));
    }

    FieldInjection injection() const { return {k_global, d_max, field_mode_from_string(mode)}; }
};

struct PlannerOptions {
    PlannerParams params;
    std::string cost_mode;

    void attach(CLI::App* cmd) {
        cmd->add_option("--w1", params.w1, "Heuristic inflation (>= 1)");
        cmd->add_option("--w2", params.w2, "Anchor bound factor (>= 1)");
        cmd->add_option("--lambda", params.lambda, "Potential weight in the inadmissible heuristic");
        cmd->add_option("--beta", params.beta, "Potential weight in edge cost (cost_augmented)");
        cmd->add_option("--cost-mode", cost_mode, "heuristic_only or cost_augmented")
            ->check(CLI::IsMember({"heuristic_only", "cost_augmented"}));
    }

    PlannerParams resolve(CostMode fallback) const {
        PlannerParams p = params;
        p.cost_mode = cost_mode.empty() ? fallback : cost_mode_from_string(cost_mode);
        p.validate();
        return p;
    }
};

// Store for a scene: from file, explicit priors, or the provider's estimate.
CoefficientStore scene_store(const SceneSpec& spec, const std::string& store_path, const std::string& priors_path,
                             SentimentProvider& provider) {
    if (!store_path.empty()) {
        CoefficientStore store = store_from_json(read_json(store_path));
        for (const std::string& f : spec.families()) {
            if (!store.contains(f)) throw BayesError("store has no coefficient for family \"" + f + "\"");
        }
        return store;
    }
    const auto families = spec.families();
    if (!priors_path.empty()) return init_priors(families, read_json(priors_path).get<FamilyValues>());
    return init_priors(families, provider.estimate_priors(families));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Prompt-steered grid navigation planner", "promptnav"};
    app.require_subcommand(1);

    // priors
    auto* priors_cmd = app.add_subcommand("priors", "Create a coefficient store for a scene");
    std::string priors_scene, priors_out, priors_file;
    ProviderOptions priors_prov;
    priors_cmd->add_option("--scene", priors_scene, "Scene JSON")->required();
    priors_cmd->add_option("--priors", priors_file, "JSON map family -> prior (instead of the provider)");
    priors_cmd->add_option("--out", priors_out, "Output store JSON (default stdout)");
    priors_prov.attach(priors_cmd);

    // prompt
    auto* prompt_cmd = app.add_subcommand("prompt", "Apply a prompt to a stored coefficient store");
    std::string prompt_store, prompt_text, prompt_out;
    ProviderOptions prompt_prov;
    prompt_cmd->add_option("--store", prompt_store, "Coefficient store JSON")->required();
    prompt_cmd->add_option("--text", prompt_text, "Prompt text")->required();
    prompt_cmd->add_option("--out", prompt_out, "Output store (default: overwrite --store)");
    prompt_prov.attach(prompt_cmd);

    // field
    auto* field_cmd = app.add_subcommand("field", "Export the potential field of a scene");
    std::string field_scene, field_store, field_priors, field_out, field_ppm;
    ProviderOptions field_prov;
    FieldOptions field_opts;
    field_cmd->add_option("--scene", field_scene, "Scene JSON")->required();
    field_cmd->add_option("--store", field_store, "Coefficient store JSON");
    field_cmd->add_option("--priors", field_priors, "JSON map family -> prior");
    field_cmd->add_option("--out", field_out, "Field JSON (default stdout)");
    field_cmd->add_option("--ppm", field_ppm, "Write a P6 heatmap");
    field_prov.attach(field_cmd);
    field_opts.attach(field_cmd);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "Plan a path, optionally steered by prompts");
    std::string plan_scene, plan_store, plan_priors, plan_out, plan_ppm, plan_strategy = "auto";
    std::vector<std::string> plan_prompts;
    bool plan_report = false;
    ProviderOptions plan_prov;
    FieldOptions plan_field;
    PlannerOptions plan_params;
    plan_cmd->add_option("--scene", plan_scene, "Scene JSON")->required();
    plan_cmd->add_option("--store", plan_store, "Coefficient store JSON");
    plan_cmd->add_option("--priors", plan_priors, "JSON map family -> prior");
    plan_cmd->add_option("--prompt", plan_prompts, "Prompt (repeatable, applied in order)");
    plan_cmd->add_option("--strategy", plan_strategy, "auto, baseline or mha_star")
        ->check(CLI::IsMember({"auto", "baseline", "mha_star"}));
    plan_cmd->add_option("--out", plan_out, "Path JSON (default stdout)");
    plan_cmd->add_option("--ppm", plan_ppm, "Write a P6 heatmap of the field used");
    plan_cmd->add_flag("--report", plan_report, "Print length and MDO");
    plan_prov.attach(plan_cmd);
    plan_field.attach(plan_cmd);
    plan_params.attach(plan_cmd);

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Baseline / safe / dangerous comparison");
    std::string cmp_scene, cmp_safe, cmp_danger, cmp_json, cmp_priors;
    ProviderOptions cmp_prov;
    FieldOptions cmp_field;
    PlannerOptions cmp_params;
    cmp_cmd->add_option("--scene", cmp_scene, "Scene JSON")->required();
    cmp_cmd->add_option("--safe", cmp_safe, "Safe prompt")->required();
    cmp_cmd->add_option("--dangerous", cmp_danger, "Dangerous prompt")->required();
    cmp_cmd->add_option("--priors", cmp_priors, "JSON map family -> prior");
    cmp_cmd->add_option("--json", cmp_json, "Also write the report as JSON");
    cmp_prov.attach(cmp_cmd);
    cmp_field.attach(cmp_cmd);
    cmp_params.attach(cmp_cmd);

    // stability
    auto* stab_cmd = app.add_subcommand("stability", "Repeat a provider call and report mean ± std");
    std::string stab_scene, stab_prompt, stab_json, stab_priors;
    std::vector<std::string> stab_families;
    int stab_trials = 100;
    ProviderOptions stab_prov;
    auto* stab_scene_opt = stab_cmd->add_option("--scene", stab_scene, "Scene JSON (families taken from it)");
    stab_cmd->add_option("--families", stab_families, "Family names")->delimiter(',')->excludes(stab_scene_opt);
    stab_cmd->add_option("--prompt", stab_prompt, "Prompt (empty: no prompt)");
    stab_cmd->add_option("-n,--trials", stab_trials, "Number of trials")->check(CLI::PositiveNumber);
    stab_cmd->add_option("--priors", stab_priors, "JSON map family -> prior");
    stab_cmd->add_option("--json", stab_json, "Also write the report as JSON");
    stab_prov.attach(stab_cmd);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
    std::string serve_addr = "127.0.0.1:8787", serve_persist;
    ProviderOptions serve_prov;
    FieldOptions serve_field;
    serve_cmd->add_option("--addr", serve_addr, "host:port");
    serve_cmd->add_option("--persist", serve_persist, "Directory for session snapshots");
    serve_prov.attach(serve_cmd);
    serve_field.attach(serve_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        // A missing required flag is reported before unknown ones; name those too.
        const std::vector<std::string> extra = app.remaining(true);
        if (!extra.empty() && !dynamic_cast<const CLI::ExtrasError*>(&e)) {
            err << "Unrecognized argument(s):";
            for (const std::string& a : extra) err << ' ' << a;
            err << "\n";
        }
        return 2;
    }

    try {
        if (*priors_cmd) {
            const SceneSpec spec = parse_scene(read_file(priors_scene));
            auto provider = make_provider(priors_prov.config());
            const std::string doc = dump(store_to_json(scene_store(spec, "", priors_file, *provider)));
            priors_out.empty() ? void(out << doc) : write_file(priors_out, doc);
        } else if (*prompt_cmd) {
            const CoefficientStore store = store_from_json(read_json(prompt_store));
            auto provider = make_provider(prompt_prov.config());
            const CoefficientStore next = apply_prompt(store, prompt_text, *provider);
            write_file(prompt_out.empty() ? prompt_store : prompt_out, dump(store_to_json(next)));
            for (const auto& [family, c] : next.families()) {
                out << family << ": " << store.posterior(family) << " -> " << c.posterior << "\n";
            }
        } else if (*field_cmd) {
            const SceneSpec spec = parse_scene(read_file(field_scene));
            auto provider = make_provider(field_prov.config());
            const CoefficientStore store = scene_store(spec, field_store, field_priors, *provider);
            const PotentialGrid field = field_for_store(store, rasterize(spec), field_opts.injection());
            const std::string doc = dump(field_to_json(field));
            field_out.empty() ? void(out << doc) : write_file(field_out, doc);
            if (!field_ppm.empty()) write_file(field_ppm, field_to_ppm(field));
        } else if (*plan_cmd) {
            const SceneSpec spec = parse_scene(read_file(plan_scene));
            const OccupancyGrid grid = rasterize(spec);
            const Cell start = spec.cell_of(spec.start);
            const Cell goal = spec.cell_of(spec.goal);

            const bool steered = !plan_prompts.empty() || !plan_store.empty() || !plan_priors.empty();
            const std::string strategy = plan_strategy == "auto" ? (steered ? "mha_star" : "baseline") : plan_strategy;

            PathResult path;
            std::optional<PotentialGrid> field;
            if (strategy == "mha_star" || !plan_ppm.empty()) {
                auto provider = make_provider(plan_prov.config());
                CoefficientStore store = scene_store(spec, plan_store, plan_priors, *provider);
                for (const std::string& p : plan_prompts) store = apply_prompt(store, p, *provider);
                field = field_for_store(store, grid, plan_field.injection());
            }
            if (strategy == "baseline") {
                path = astar_baseline(grid, start, goal);
            } else {
                path = mha_star(grid, *field, start, goal, plan_params.resolve(CostMode::HeuristicOnly));
            }

            const std::string doc = dump(path_to_json(path, grid.resolution()));
            plan_out.empty() ? void(out << doc) : write_file(plan_out, doc);
            if (!plan_ppm.empty()) write_file(plan_ppm, field_to_ppm(*field));
            if (plan_report) {
                const auto mdo = min_dist_to_obstacles(path, grid);
                out << "planner " << path.planner << "  length_m " << path_length(path, grid.resolution())
                    << "  mdo_m " << (mdo ? std::to_string(*mdo) : std::string("-")) << "  expansions "
                    << path.expansions << "\n";
            }
        } else if (*cmp_cmd) {
            const SceneSpec spec = parse_scene(read_file(cmp_scene));
            std::optional<FamilyValues> priors;
            if (!cmp_priors.empty()) priors = read_json(cmp_priors).get<FamilyValues>();
            const ScenarioReport report =
                compare_scenarios(spec, {cmp_safe, cmp_danger}, cmp_prov.config(),
                                  cmp_params.resolve(CostMode::CostAugmented), priors, cmp_field.injection());
            out << report.render_table();
            if (!cmp_json.empty()) write_file(cmp_json, dump(report.to_json(spec.resolution)));
        } else if (*stab_cmd) {
            std::vector<std::string> families = stab_families;
            if (!stab_scene.empty()) families = parse_scene(read_file(stab_scene)).families();
            if (families.empty()) throw Error("stability needs --scene or --families");
            auto provider = make_provider(stab_prov.config());
            const FamilyValues priors = stab_priors.empty() ? provider->estimate_priors(families)
                                                            : read_json(stab_priors).get<FamilyValues>();
            const CoefficientStore store = init_priors(families, priors);
            const StabilityReport report = stability_report(*provider, stab_prompt, families, store, stab_trials);
            out << report.render_table();
            if (!stab_json.empty()) write_file(stab_json, dump(report.to_json()));
        } else if (*serve_cmd) {
            service::ServiceConfig cfg;
            std::tie(cfg.host, cfg.port) = service::parse_address(serve_addr);
            if (!serve_persist.empty()) cfg.persist_dir = serve_persist;
            const ProviderConfig pc = serve_prov.config();
            cfg.default_provider = to_string(pc.kind);
            cfg.lexicon = pc.lexicon;
            cfg.injection = serve_field.injection();
            service::SessionService svc(cfg);
            const bool ok = svc.listen([&](int port) {
                out << "listening on " << cfg.host << ":" << port << std::endl;
            });
            if (!ok) throw Error("cannot listen on " + serve_addr);
        }
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ProviderError& e) {
        err << "error: " << e.what() << "\n";
        if (!e.raw_reply().empty()) err << "provider reply: " << e.raw_reply() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace promptnav::cli
