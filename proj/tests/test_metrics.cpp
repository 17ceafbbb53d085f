#include <doctest.h>

#include <fstream>
#include <sstream>

#include "promptnav/errors.hpp"
#include "promptnav/metrics.hpp"

using namespace promptnav;

namespace {

SceneSpec load_fixture() {
    std::ifstream in(std::string(PROMPTNAV_TEST_DATA) + "/acceptance_scene.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

PathResult chain(std::vector<Cell> cells) {
    PathResult p;
    p.cells = std::move(cells);
    return p;
}

const ScenarioPrompts kPrompts{"The environment is incredibly safe", "The environment is incredibly dangerous"};

}  // namespace

TEST_CASE("path length from steps") {
    CHECK(path_length(chain({{0, 0}, {1, 0}, {2, 0}, {3, 0}}), 1.0) == doctest::Approx(3.0));
    CHECK(path_length(chain({{0, 0}, {1, 1}}), 1.0) == doctest::Approx(1.414214).epsilon(1e-6));
    CHECK(path_length(chain({{4, 4}}), 0.1) == 0.0);
}

TEST_CASE("minimum distance to obstacles") {
    OccupancyGrid g(10, 10, 0.2);
    CHECK_FALSE(min_dist_to_obstacles(chain({{0, 0}, {1, 0}}), g).has_value());
    std::vector<CellIndex> wall;
    for (int r = 0; r < 10; ++r) wall.push_back(g.index({9, r}));
    g.add_obstacle("wall", "Wall", wall);
    // Closest path cell is two columns from the wall.
    CHECK(*min_dist_to_obstacles(chain({{3, 2}, {5, 3}, {7, 4}, {6, 5}}), g) == doctest::Approx(0.4));

    OccupancyGrid h(10, 10, 0.1);
    h.add_obstacle("box", "Chair", {h.index({5, 5})});
    CHECK(*min_dist_to_obstacles(chain({{2, 4}, {3, 4}, {4, 5}, {3, 6}}), h) == doctest::Approx(0.1));
}

TEST_CASE("mdo is invariant under reversal and obstacle relabeling") {
    OccupancyGrid a(8, 8, 0.1);
    OccupancyGrid b(8, 8, 0.1);
    a.add_obstacle("x", "Wall", {a.index({4, 4}), a.index({4, 5})});
    a.add_obstacle("y", "Chair", {a.index({1, 6})});
    b.add_obstacle("renamed-1", "Chair", {b.index({1, 6})});
    b.add_obstacle("renamed-2", "Wall", {b.index({4, 4}), b.index({4, 5})});
    std::vector<Cell> cells{{0, 0}, {1, 1}, {2, 2}, {2, 3}, {3, 3}};
    const auto forward = min_dist_to_obstacles(chain(cells), a);
    std::reverse(cells.begin(), cells.end());
    CHECK(min_dist_to_obstacles(chain(cells), a) == forward);
    CHECK(min_dist_to_obstacles(chain(cells), b) == forward);
}

TEST_CASE("scenario comparison on the fixture scene") {
    const SceneSpec spec = load_fixture();
    LexiconProvider provider;
    const ScenarioReport r = compare_scenarios(spec, kPrompts, provider);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].name == "Baseline");
    CHECK(r.rows[1].name == "Safe");
    CHECK(r.rows[2].name == "Dangerous");
    CHECK(r.cost_mode == CostMode::CostAugmented);
    CHECK_FALSE(r.rows[0].prompt.has_value());

    const auto& base = r.row("Baseline");
    const auto& safe = r.row("Safe");
    const auto& danger = r.row("Dangerous");
    CHECK(*danger.mdo_m >= *safe.mdo_m);
    CHECK(*safe.mdo_m >= *base.mdo_m);
    CHECK(base.path_length_m <= safe.path_length_m);
    CHECK(base.path_length_m <= danger.path_length_m);
    CHECK(danger.path.planner == "mha_star");

    // Each prompted row starts from the same priors.
    for (const auto& [f, p] : danger.posteriors) CHECK(p > base.posteriors.at(f));
    for (const auto& [f, p] : safe.posteriors) CHECK(p < base.posteriors.at(f));

    const ScenarioReport again = compare_scenarios(spec, kPrompts, provider);
    CHECK(again.to_json(spec.resolution) == r.to_json(spec.resolution));
    CHECK(again.render_table() == r.render_table());

    const std::string table = r.render_table();
    CHECK(table.find("Path Length(m)") != std::string::npos);
    CHECK(table.find("MDO(m)") != std::string::npos);
}

TEST_CASE("report rows are reproducible from their posterior snapshots") {
    const SceneSpec spec = load_fixture();
    LexiconProvider provider;
    const ScenarioReport r = compare_scenarios(spec, kPrompts, provider);
    const OccupancyGrid grid = rasterize(spec);
    for (const char* name : {"Safe", "Dangerous"}) {
        const ScenarioRow& row = r.row(name);
        const std::vector<std::string> fams = spec.families();
        const PotentialGrid field = field_for_store(init_priors(fams, row.posteriors), grid);
        const PathResult p = mha_star(grid, field, spec.cell_of(spec.start), spec.cell_of(spec.goal),
                                      default_comparison_params());
        CHECK(p.cells == row.path.cells);
    }
}

namespace {

// Scales the posterior field for `prompt` by each c and checks that MDO never drops.
void check_monotone_response(const std::string& prompt) {
    const SceneSpec spec = load_fixture();
    const OccupancyGrid grid = rasterize(spec);
    LexiconProvider provider;
    const std::vector<std::string> fams = spec.families();
    const CoefficientStore priors = init_priors(fams, provider.estimate_priors(fams));
    const PotentialGrid base = field_for_store(apply_prompt(priors, prompt, provider), grid);
    double last = 0.0;
    for (double c : {1.0, 1.25, 1.5, 2.0, 3.0, 5.0}) {
        PotentialGrid scaled = base;
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = base[i] * c;
        const PathResult p =
            mha_star(grid, scaled, spec.cell_of(spec.start), spec.cell_of(spec.goal), default_comparison_params());
        const double mdo = *min_dist_to_obstacles(p, grid);
        CAPTURE(prompt);
        CAPTURE(c);
        CHECK(mdo >= last);
        last = mdo;
    }
}

}  // namespace

TEST_CASE("stronger fields never bring the fixture path closer to obstacles") {
    check_monotone_response(kPrompts.safe);
    check_monotone_response(kPrompts.dangerous);
}

// Known counterexample: with the priors-only field the planner returns the exactly
// optimal path at c = 1.25, and that path passes 0.1 m closer than the bounded
// suboptimal one found at c = 1. Cost integrates the field while MDO is a minimum,
// so the property is not implied by optimality. Kept as a live check.
TEST_CASE("stronger priors-only fields never bring the fixture path closer to obstacles" * doctest::may_fail()) {
    check_monotone_response("proceed");
}

TEST_CASE("row errors carry the row tag and keep their type") {
    SceneSpec spec = load_fixture();
    LexiconProvider provider;
    CHECK_THROWS_AS(compare_scenarios(spec, kPrompts, provider, default_comparison_params(), FamilyValues{{"Wall", 0.3}}),
                    BayesError);
    try {
        compare_scenarios(spec, kPrompts, provider, default_comparison_params(), FamilyValues{{"Wall", 0.3}});
    } catch (const BayesError& e) {
        CHECK(std::string(e.what()).rfind("Priors: ", 0) == 0);
    }
}
