#include <doctest.h>

#include "promptnav/errors.hpp"
#include "promptnav/planner.hpp"
#include "support/oracles.hpp"

using namespace promptnav;

namespace {

PotentialGrid zero_field(const OccupancyGrid& g) { return PotentialGrid(g.cols(), g.rows(), g.resolution()); }

PlannerParams with_mode(CostMode mode, double w1 = 2.0, double w2 = 2.0) {
    PlannerParams p;
    p.cost_mode = mode;
    p.w1 = w1;
    p.w2 = w2;
    return p;
}

}  // namespace

TEST_CASE("straight corridor") {
    OccupancyGrid g(4, 1, 1.0);
    const PathResult p = astar_baseline(g, {0, 0}, {3, 0});
    CHECK(p.cells.size() == 4);
    CHECK(p.cost == doctest::Approx(3.0));
    CHECK(chain_length(p.cells, 1.0) == doctest::Approx(3.0));
    CHECK(p.planner == "astar");
}

TEST_CASE("start equals goal") {
    OccupancyGrid g(3, 3, 0.5);
    const PathResult p = astar_baseline(g, {1, 1}, {1, 1});
    CHECK(p.cells == std::vector<Cell>{{1, 1}});
    CHECK(p.cost == 0.0);
    const PathResult m = mha_star(g, zero_field(g), {1, 1}, {1, 1}, PlannerParams{});
    CHECK(m.cells.size() == 1);
    CHECK(m.cost == 0.0);
}

TEST_CASE("walled-in goal and bad endpoints") {
    OccupancyGrid g(5, 5, 1.0);
    std::vector<CellIndex> ring;
    for (int c = 1; c <= 3; ++c) {
        for (int r = 1; r <= 3; ++r) {
            if (c != 2 || r != 2) ring.push_back(g.index({c, r}));
        }
    }
    g.add_obstacle("ring", "Wall", ring);
    CHECK_THROWS_AS(astar_baseline(g, {0, 0}, {2, 2}), NoPathError);
    CHECK_THROWS_AS(mha_star(g, zero_field(g), {0, 0}, {2, 2}, PlannerParams{}), NoPathError);
    CHECK_THROWS_AS(astar_baseline(g, {0, 0}, {1, 1}), PlannerError);
    CHECK_THROWS_AS(astar_baseline(g, {0, 0}, {7, 7}), PlannerError);
    CHECK_THROWS_AS(mha_star(g, PotentialGrid(2, 2, 1.0), {0, 0}, {4, 4}, PlannerParams{}), PlannerError);
}

TEST_CASE("no corner cutting between diagonal blocks") {
    OccupancyGrid g(2, 2, 1.0);
    g.add_obstacle("a", "Wall", {g.index({1, 0})});
    g.add_obstacle("b", "Wall", {g.index({0, 1})});
    CHECK(successors(g, {0, 0}).empty());
    CHECK_THROWS_AS(astar_baseline(g, {0, 0}, {1, 1}), NoPathError);
}

TEST_CASE("parameter validation") {
    PlannerParams p;
    p.w1 = 0.5;
    CHECK_THROWS_AS(p.validate(), PlannerError);
    p = {};
    p.lambda = -1;
    CHECK_THROWS_AS(p.validate(), PlannerError);
    p = {};
    p.connectivity = 4;
    CHECK_THROWS_AS(p.validate(), PlannerError);
    p = PlannerParams::from_json({{"w1", 3.0}, {"cost_mode", "cost_augmented"}});
    CHECK(p.w1 == 3.0);
    CHECK(p.w2 == 2.0);
    CHECK(p.cost_mode == CostMode::CostAugmented);
    CHECK(PlannerParams::from_json(p.to_json()).to_json() == p.to_json());
}

TEST_CASE("baseline equals the Dijkstra optimum and paths are valid") {
    const auto corpus = oracle::random_corpus(101, 40, 30, 30, 0.2);
    for (const auto& inst : corpus) {
        const PathResult p = astar_baseline(inst.grid, inst.start, inst.goal);
        const auto best = oracle::dijkstra_steps(inst.grid, inst.start, inst.goal);
        REQUIRE(best.has_value());
        REQUIRE(p.cost == best->meters(inst.grid.resolution()));
        REQUIRE(chain_length(p.cells, inst.grid.resolution()) == p.cost);
        CHECK_NOTHROW(check_path(p, inst.grid, inst.start, inst.goal));
    }
}

TEST_CASE("mha_star stays within w1*w2 of the optimum in both modes") {
    const auto corpus = oracle::random_corpus(103, 40, 30, 30, 0.2);
    for (const auto& inst : corpus) {
        const double res = inst.grid.resolution();
        const double opt_len = oracle::dijkstra_steps(inst.grid, inst.start, inst.goal)->meters(res);
        for (const double w : {1.0, 1.5, 2.0}) {
            const PathResult h = mha_star(inst.grid, inst.field, inst.start, inst.goal, with_mode(CostMode::HeuristicOnly, w, w));
            CHECK_NOTHROW(check_path(h, inst.grid, inst.start, inst.goal));
            REQUIRE(h.cost <= w * w * opt_len * (1 + 1e-12));

            const PlannerParams pa = with_mode(CostMode::CostAugmented, w, w);
            const PathResult a = mha_star(inst.grid, inst.field, inst.start, inst.goal, pa);
            CHECK_NOTHROW(check_path(a, inst.grid, inst.start, inst.goal));
            const double opt = *oracle::dijkstra_weighted(inst.grid, inst.field, inst.start, inst.goal, pa.beta);
            REQUIRE(a.cost <= w * w * opt * (1 + 1e-12));
            REQUIRE(a.cost == doctest::Approx(path_cost(a.cells, inst.field, inst.grid, pa)).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero field and unit weights reduce to the baseline") {
    const auto corpus = oracle::random_corpus(107, 40, 30, 30, 0.2);
    for (const auto& inst : corpus) {
        const PotentialGrid zero = zero_field(inst.grid);
        const PathResult base = astar_baseline(inst.grid, inst.start, inst.goal);
        for (CostMode mode : {CostMode::HeuristicOnly, CostMode::CostAugmented}) {
            const PathResult m = mha_star(inst.grid, zero, inst.start, inst.goal, with_mode(mode, 1.0, 1.0));
            REQUIRE(m.cost == base.cost);
        }
    }
}

TEST_CASE("identical inputs give identical searches") {
    const auto corpus = oracle::random_corpus(109, 5, 30, 30, 0.2);
    for (const auto& inst : corpus) {
        const PlannerParams p = with_mode(CostMode::CostAugmented);
        const PathResult a = mha_star(inst.grid, inst.field, inst.start, inst.goal, p);
        const PathResult b = mha_star(inst.grid, inst.field, inst.start, inst.goal, p);
        CHECK(a.cells == b.cells);
        CHECK(a.expansions == b.expansions);
        CHECK(a.cost == b.cost);
    }
}

TEST_CASE("path json") {
    OccupancyGrid g(3, 2, 0.5);
    const PathResult p = astar_baseline(g, {0, 0}, {2, 1});
    const nlohmann::json j = path_to_json(p, 0.5);
    CHECK(j["cells"].front() == nlohmann::json::array({0, 0}));
    CHECK(j["cells"].back() == nlohmann::json::array({2, 1}));
    CHECK(j["length_m"].get<double>() == doctest::Approx(0.5 + 0.5 * std::sqrt(2.0)));
    CHECK(j["planner"] == "astar");
    CHECK(j.contains("params"));
    CHECK(j.contains("cost"));
}

TEST_CASE("check_path rejects broken chains") {
    OccupancyGrid g(4, 1, 1.0);
    PathResult p;
    p.cells = {{0, 0}, {2, 0}, {3, 0}};
    CHECK_THROWS_AS(check_path(p, g, {0, 0}, {3, 0}), PlannerError);
    p.cells = {{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(check_path(p, g, {0, 0}, {3, 0}), PlannerError);
}
