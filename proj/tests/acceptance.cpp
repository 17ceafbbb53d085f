// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "promptnav/errors.hpp"
#include "promptnav/metrics.hpp"
#include "promptnav/service.hpp"
#include "support/oracles.hpp"

using namespace promptnav;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s  %-28s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
    return buf;
}

SceneSpec fixture() {
    std::ifstream in(std::string(PROMPTNAV_TEST_DATA) + "/acceptance_scene.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

const std::vector<oracle::Instance>& corpus() {
    static const std::vector<oracle::Instance> c = oracle::random_corpus(20240611, 200, 50, 50, 0.2);
    return c;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome acceptance_scene() {
    Outcome o;
    const auto t0 = Clock::now();
    const SceneSpec spec = fixture();
    LexiconProvider provider;
    const std::vector<std::string> fams = spec.families();
    const FamilyValues priors = provider.estimate_priors(fams);
    const FamilyValues table2{{"Wall", 0.2}, {"Grinder", 0.8}, {"Chainsaw", 0.95}, {"Robot", 0.9}, {"Chair", 0.6}};
    for (const auto& [f, p] : priors) o.require(table2.at(f) == p, "prior of " + f + " differs from the reference table");

    const ScenarioReport r = compare_scenarios(
        spec, {"The environment is incredibly safe", "The environment is incredibly dangerous"}, provider);
    const double secs = seconds_since(t0);
    const auto& b = r.row("Baseline");
    const auto& s = r.row("Safe");
    const auto& d = r.row("Dangerous");
    o.require(b.mdo_m && s.mdo_m && d.mdo_m, "missing MDO");
    if (!o.pass) return o;
    const double mb = *b.mdo_m, ms = *s.mdo_m, md = *d.mdo_m;
    o.require(md >= 1.25 * mb, "MDO(D) < 1.25 x MDO(B)");
    o.require(md >= ms, "MDO(D) < MDO(S)");
    o.require(ms >= mb, "MDO(S) < MDO(B)");
    o.require(d.path_length_m <= 1.4 * b.path_length_m, "length(D) > 1.4 x length(B)");
    o.require(secs < 5.0, "runtime >= 5 s");
    if (o.pass) {
        o.detail = fmt("B %.3fm/%.2fm  S %.3fm/%.2fm  D %.3fm/%.2fm", b.path_length_m, mb, s.path_length_m, ms,
                       d.path_length_m, md);
    }
    return o;
}

Outcome oracle_optimality() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto& instances = corpus();
    double worst_h = 0.0, worst_a = 0.0;
    for (std::size_t i = 0; i < instances.size() && o.pass; ++i) {
        const auto& in = instances[i];
        const double res = in.grid.resolution();
        const auto opt = oracle::dijkstra_steps(in.grid, in.start, in.goal);
        o.require(opt.has_value(), "oracle found no path");
        if (!opt) break;
        const double opt_len = opt->meters(res);
        const PathResult base = astar_baseline(in.grid, in.start, in.goal);
        o.require(base.cost == opt_len, "instance " + std::to_string(i) + ": A* cost differs from Dijkstra");

        PlannerParams ph;
        const PathResult h = mha_star(in.grid, in.field, in.start, in.goal, ph);
        o.require(h.cost <= ph.w1 * ph.w2 * opt_len, "instance " + std::to_string(i) + ": heuristic_only bound");
        worst_h = std::max(worst_h, h.cost / std::max(opt_len, 1e-300));

        PlannerParams pa;
        pa.cost_mode = CostMode::CostAugmented;
        const PathResult a = mha_star(in.grid, in.field, in.start, in.goal, pa);
        const double opt_a = *oracle::dijkstra_weighted(in.grid, in.field, in.start, in.goal, pa.beta);
        o.require(a.cost <= pa.w1 * pa.w2 * opt_a, "instance " + std::to_string(i) + ": cost_augmented bound");
        worst_a = std::max(worst_a, a.cost / std::max(opt_a, 1e-300));
    }
    o.require(seconds_since(t0) < 60.0, "runtime >= 60 s");
    if (o.pass) o.detail = fmt("200 grids; worst ratio %.3f (heuristic_only), %.3f (cost_augmented)", worst_h, worst_a);
    return o;
}

Outcome field_oracle() {
    Outcome o;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> side(10, 100);
    std::uniform_int_distribution<int> nobs(1, 6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int scene = 0; scene < 20; ++scene) {
        SceneSpec spec;
        spec.resolution = 0.1;
        spec.grid_width = side(rng) * 0.1;
        spec.grid_height = side(rng) * 0.1;
        const int k = nobs(rng);
        for (int i = 0; i < k; ++i) {
            const double cx = u(rng) * spec.grid_width;
            const double cy = u(rng) * spec.grid_height;
            const double rx = 0.05 + 0.5 * u(rng);
            const double ry = 0.05 + 0.5 * u(rng);
            Obstacle ob{"o" + std::to_string(i), "F" + std::to_string(i % 3), {}};
            if (i % 2 == 0) {
                ob.footprint = {{cx - rx, cy - ry}, {cx + rx, cy - ry}, {cx + rx, cy + ry}, {cx - rx, cy + ry}};
            } else {
                ob.footprint = {{cx - rx, cy - ry}, {cx + rx, cy - ry}, {cx, cy + ry}};
            }
            for (auto& v : ob.footprint) {
                v.x = std::clamp(v.x, 0.0, spec.grid_width);
                v.y = std::clamp(v.y, 0.0, spec.grid_height);
            }
            spec.obstacles.push_back(ob);
        }
        const OccupancyGrid grid = rasterize(spec);
        FieldParams params;
        for (const auto& [id, cells] : grid.per_obstacle_cells()) params.per_obstacle[id] = {5.0 * u(rng), 0.5 + 4.5 * u(rng)};
        const PotentialGrid f = build_field(grid, params);
        const std::vector<double> ref = oracle::brute_force_field(grid, params);
        for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(f[i] - ref[i]));
    }
    o.require(worst <= 1e-9, fmt("max deviation %.3g > 1e-9", worst));
    const double v = repulsive_potential(1.0, 1.0, FieldParams::kDefaultDmax);
    o.require(std::abs(v - 0.367879) <= 1e-6, fmt("repulsive_potential(1, 1) = %.9f", v));
    if (o.pass) o.detail = fmt("20 scenes, max deviation %.3g; potential(1 m) = %.6f", worst, v);
    return o;
}

Outcome bayes_algebra() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Neutral evidence leaves every posterior bit-identical.
    for (int i = 0; i < 1000; ++i) {
        const double p = clamp_probability(u(rng));
        o.require(bayes_update(p, 0.5) == p, "L = 0.5 changed the posterior");
    }
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double p = 0.05 + 0.9 * u(rng);
        std::vector<double> chain(1 + i % 5);
        for (double& l : chain) l = 0.2 + 0.6 * u(rng);
        std::vector<FamilyValues> maps;
        for (double l : chain) maps.push_back({{"X", l}});
        const CoefficientStore s = update_sequence(init_priors({"X"}, {{"X", p}}), maps);
        worst = std::max(worst, std::abs(s.posterior("X") - closed_form_posterior(p, chain)));

        std::vector<FamilyValues> shuffled = maps;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const CoefficientStore t = update_sequence(init_priors({"X"}, {{"X", p}}), shuffled);
        o.require(t.posterior("X") == s.posterior("X"), "permutation changed the posterior");
        o.require(s.replayed() == s, "replay changed the store");
    }
    o.require(worst <= 1e-12, fmt("fold vs closed form deviates by %.3g", worst));
    for (int i = 0; i < 1000; ++i) {
        const double p = clamp_probability(u(rng));
        const double l = u(rng);
        const double post = bayes_update(p, l);
        o.require(post > 0.0 && post < 1.0, "posterior left (0, 1)");
        if (l > 0.5 && p < 1.0 - kProbabilityEps) o.require(post > p, fmt("direction law broken at p=%.6f L=%.6f", p, l));
        if (l < 0.5 && p > kProbabilityEps) o.require(post < p, fmt("direction law broken at p=%.6f L=%.6f", p, l));
    }
    // Extreme chains stay inside the open interval.
    double p = 0.5;
    for (int i = 0; i < 100; ++i) p = bayes_update(p, 1.0);
    o.require(p < 1.0, "posterior reached 1");
    if (o.pass) o.detail = fmt("fold vs closed form max deviation %.3g", worst);
    return o;
}

Outcome reduction_law() {
    Outcome o;
    for (std::size_t i = 0; i < corpus().size(); ++i) {
        const auto& in = corpus()[i];
        const PotentialGrid zero = build_field(in.grid, FieldParams::uniform(in.grid, 0.0));
        const PathResult base = astar_baseline(in.grid, in.start, in.goal);
        for (CostMode mode : {CostMode::HeuristicOnly, CostMode::CostAugmented}) {
            PlannerParams p;
            p.w1 = 1.0;
            p.w2 = 1.0;
            p.cost_mode = mode;
            const PathResult m = mha_star(in.grid, zero, in.start, in.goal, p);
            o.require(m.cost == base.cost,
                      "instance " + std::to_string(i) + " (" + to_string(mode) + "): mha_star cost differs");
        }
    }
    if (o.pass) o.detail = "200 grids, both cost modes";
    return o;
}

Outcome sentiment_determinism() {
    Outcome o;
    const double danger = lexicon_score("The environment is incredibly dangerous");
    const double safe = lexicon_score("The environment is incredibly safe");
    o.require(danger > 0.5 && 0.5 > safe, fmt("scores %.4f / %.4f", danger, safe));
    const std::vector<std::string> fams{"Wall", "Grinder", "Chainsaw", "Robot", "Chair"};
    LexiconProvider provider;
    const CoefficientStore store = init_priors(fams, provider.estimate_priors(fams));
    for (const char* prompt : {"The environment is incredibly dangerous", "The environment is incredibly safe", ""}) {
        const StabilityReport r = stability_report(provider, prompt, fams, store, 100);
        for (const auto& [f, st] : r.families) o.require(st.stddev == 0.0, "non-zero spread for " + f);
    }
    if (o.pass) o.detail = fmt("dangerous %.4f, safe %.4f, std 0 over 100 trials", danger, safe);
    return o;
}

class FlakyProvider : public SentimentProvider {
public:
    explicit FlakyProvider(int mode) : mode_(mode) {}
    std::string tag() const override { return "lexicon"; }
    LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                                 const CoefficientStore& store) override {
        if (mode_ == 1) throw TransportError("injected transport failure");
        if (mode_ == 2) throw ReplyError("injected malformed reply", "not json");
        LikelihoodAssignment a = inner_.analyze(prompt, families, store);
        if (mode_ == 3) a.likelihoods.erase(a.likelihoods.begin());
        return a;
    }
    FamilyValues estimate_priors(const std::vector<std::string>& families) override {
        return inner_.estimate_priors(families);
    }

private:
    int mode_;
    LexiconProvider inner_;
};

Outcome service_atomicity() {
    Outcome o;
    int mode = 0;
    service::ServiceConfig cfg;
    service::SessionService svc(cfg, [&](const std::string&) { return std::make_unique<FlakyProvider>(mode); });
    std::ifstream in(std::string(PROMPTNAV_TEST_DATA) + "/acceptance_scene.json");
    const service::Response created = svc.handle("POST", "/v1/scenes", json::parse(in).dump());
    o.require(created.status == 201, "session not created");
    if (!o.pass) return o;
    const std::string id = created.body["session"];
    const std::string base = "/v1/scenes/" + id;
    for (const char* text : {"The environment is incredibly dangerous", "the grinder is safe", "very crowded"}) {
        o.require(svc.handle("POST", base + "/prompts", json{{"text", text}}.dump()).status == 200, "prompt failed");
    }
    const std::string before = *svc.state_hash(id);
    int injected = 0;
    for (int m : {1, 2, 3}) {
        mode = m;
        const auto r = svc.handle("POST", base + "/prompts", json{{"text", "incredibly dangerous"}}.dump());
        o.require(r.status >= 400, "injected failure was not reported");
        o.require(*svc.state_hash(id) == before, "state changed after injected failure " + std::to_string(m));
        ++injected;
    }
    mode = 0;
    o.require(svc.handle("POST", base + "/plan", json{{"params", {{"w1", 0.0}}}}.dump()).status == 400,
              "invalid plan accepted");
    o.require(*svc.state_hash(id) == before, "state changed after a rejected plan");

    const CoefficientStore store = store_from_json(svc.handle("GET", base + "/coefficients", "").body);
    std::vector<FamilyValues> chain;
    for (const EvidenceRecord& r : store.evidence()) chain.push_back(r.likelihoods);
    const CoefficientStore replayed = update_sequence(init_priors(store.family_names(), store.priors()), chain);
    o.require(replayed.posteriors() == store.posteriors(), "replayed posteriors differ");
    o.require(json(replayed.posteriors()) == svc.handle("GET", base, "").body["posteriors"],
              "replayed posteriors differ from the session");
    if (o.pass) o.detail = fmt("%.0f injected failures, hash stable; replay exact over %.0f records", injected + 1.0,
                               static_cast<double>(chain.size()));
    return o;
}

}  // namespace

int main() {
    report("acceptance scene", acceptance_scene);
    report("oracle optimality", oracle_optimality);
    report("field oracle", field_oracle);
    report("bayesian algebra", bayes_algebra);
    report("reduction law", reduction_law);
    report("sentiment determinism", sentiment_determinism);
    report("service atomicity", service_atomicity);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
