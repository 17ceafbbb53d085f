#pragma once
// 8-connected grid search: baseline A* and shared multi-heuristic A*.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptnav/field.hpp"
#include "promptnav/scene.hpp"

namespace promptnav {

enum class CostMode {
    /// Edge cost is geometric length; the potential only shapes the inadmissible heuristic.
    HeuristicOnly,
    /// Edge cost is length * (1 + beta * mean potential of the two endpoints).
    CostAugmented,
};

std::string to_string(CostMode mode);
CostMode cost_mode_from_string(const std::string& s);

struct PlannerParams {
    int connectivity = 8;
    double w1 = 2.0;      ///< heuristic inflation
    double w2 = 2.0;      ///< anchor bound factor
    double lambda = 1.0;  ///< meters of inadmissible heuristic per unit potential
    CostMode cost_mode = CostMode::HeuristicOnly;
    double beta = 1.0;

    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static PlannerParams from_json(const nlohmann::json& doc);
};

struct PathResult {
    std::vector<Cell> cells;
    double cost = 0.0;
    std::size_t expansions = 0;
    std::string planner;
    nlohmann::json params = nlohmann::json::object();
};

/// Length of a cell chain from its step counts: res * (orthogonal + sqrt(2) * diagonal).
/// Paths with equal step counts get bit-identical lengths regardless of step order.
double chain_length(const std::vector<Cell>& cells, double resolution);
double steps_length(long orthogonal, long diagonal, double resolution);

/// Cells reachable in one move from `from`: 8 neighbours, in range, unblocked,
/// diagonals only when both orthogonal side cells are free. Fixed order.
std::vector<Cell> successors(const OccupancyGrid& grid, Cell from);

/// Shortest 8-connected path with a Euclidean heuristic. Cost is the path length in meters.
/// Throws PlannerError on blocked/out-of-range endpoints, NoPathError when unreachable.
PathResult astar_baseline(const OccupancyGrid& grid, Cell start, Cell goal);

/// Shared-closed-list MHA* with anchor h0 = Euclidean distance to goal and
/// one inadmissible heuristic h1 = h0 + lambda * G. The returned cost is within
/// w1 * w2 of the optimum for the active cost mode.
PathResult mha_star(const OccupancyGrid& grid, const PotentialGrid& field, Cell start, Cell goal,
                    const PlannerParams& params);

/// Cost of `cells` under `params.cost_mode`, summed from start to goal.
double path_cost(const std::vector<Cell>& cells, const PotentialGrid& field, const OccupancyGrid& grid,
                 const PlannerParams& params);

/// `{"cells": [[col,row],...], "cost", "length_m", "planner", "params", "expansions"}`
nlohmann::json path_to_json(const PathResult& path, double resolution);

/// Throws PlannerError unless contiguous, unblocked, and runs start → goal.
void check_path(const PathResult& path, const OccupancyGrid& grid, Cell start, Cell goal);

}  // namespace promptnav
