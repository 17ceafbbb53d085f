#include "promptnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "promptnav/errors.hpp"

namespace promptnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMoves[8][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};

// Ordered by key, then heuristic, then row-major index.
using OpenKey = std::tuple<double, double, CellIndex>;

class OpenList {
public:
    explicit OpenList(std::size_t n) : key_(n), present_(n, false) {}

    void upsert(CellIndex s, double key, double h) {
        if (present_[s]) set_.erase(key_[s]);
        key_[s] = {key, h, s};
        present_[s] = true;
        set_.insert(key_[s]);
    }
    void remove(CellIndex s) {
        if (!present_[s]) return;
        set_.erase(key_[s]);
        present_[s] = false;
    }
    bool empty() const { return set_.empty(); }
    double min_key() const { return set_.empty() ? kInf : std::get<0>(*set_.begin()); }
    CellIndex top() const { return std::get<2>(*set_.begin()); }

private:
    std::set<OpenKey> set_;
    std::vector<OpenKey> key_;
    std::vector<bool> present_;
};

void check_endpoints(const OccupancyGrid& grid, Cell start, Cell goal) {
    if (!grid.in_range(start)) throw PlannerError("start cell out of range");
    if (!grid.in_range(goal)) throw PlannerError("goal cell out of range");
    if (grid.is_blocked(start)) throw PlannerError("start cell is blocked");
    if (grid.is_blocked(goal)) throw PlannerError("goal cell is blocked");
}

double euclid(const OccupancyGrid& grid, CellIndex a, Cell goal) {
    const Cell c = grid.cell(a);
    return std::hypot(double(c.col - goal.col), double(c.row - goal.row)) * grid.resolution();
}

double move_length(Cell a, Cell b, double res) {
    return (a.col != b.col && a.row != b.row) ? std::sqrt(2.0) * res : res;
}

std::vector<Cell> trace_back(const OccupancyGrid& grid, const std::vector<std::ptrdiff_t>& parent, CellIndex goal) {
    std::vector<Cell> cells;
    for (std::ptrdiff_t s = static_cast<std::ptrdiff_t>(goal); s >= 0; s = parent[s]) {
        cells.push_back(grid.cell(static_cast<CellIndex>(s)));
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
}

double edge_cost(const OccupancyGrid& grid, const PotentialGrid& field, const PlannerParams& p, CellIndex u,
                 CellIndex v) {
    const double len = move_length(grid.cell(u), grid.cell(v), grid.resolution());
    if (p.cost_mode == CostMode::HeuristicOnly) return len;
    return len * (1.0 + p.beta * 0.5 * (field[u] + field[v]));
}

}  // namespace

std::string to_string(CostMode mode) {
    return mode == CostMode::HeuristicOnly ? "heuristic_only" : "cost_augmented";
}

CostMode cost_mode_from_string(const std::string& s) {
    if (s == "heuristic_only") return CostMode::HeuristicOnly;
    if (s == "cost_augmented") return CostMode::CostAugmented;
    throw PlannerError("unknown cost mode \"" + s + "\"");
}

void PlannerParams::validate() const {
    if (connectivity != 8) throw PlannerError("only 8-connectivity is supported");
    if (!(w1 >= 1.0) || !(w2 >= 1.0) || !std::isfinite(w1) || !std::isfinite(w2)) {
        throw PlannerError("w1 and w2 must be finite and >= 1");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PlannerError("lambda must be finite and >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw PlannerError("beta must be finite and >= 0");
}

nlohmann::json PlannerParams::to_json() const {
    return {{"connectivity", connectivity}, {"w1", w1},
            {"w2", w2},                     {"lambda", lambda},
            {"cost_mode", to_string(cost_mode)}, {"beta", beta}};
}

PlannerParams PlannerParams::from_json(const nlohmann::json& doc) {
    PlannerParams p;
    try {
        p.connectivity = doc.value("connectivity", p.connectivity);
        p.w1 = doc.value("w1", p.w1);
        p.w2 = doc.value("w2", p.w2);
        p.lambda = doc.value("lambda", p.lambda);
        p.beta = doc.value("beta", p.beta);
        if (doc.contains("cost_mode")) p.cost_mode = cost_mode_from_string(doc.at("cost_mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw PlannerError(std::string("malformed planner params: ") + e.what());
    }
    p.validate();
    return p;
}

double steps_length(long orthogonal, long diagonal, double resolution) {
    return resolution * (static_cast<double>(orthogonal) + static_cast<double>(diagonal) * std::sqrt(2.0));
}

double chain_length(const std::vector<Cell>& cells, double resolution) {
    long orth = 0;
    long diag = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        if (cells[i].col != cells[i - 1].col && cells[i].row != cells[i - 1].row) ++diag;
        else ++orth;
    }
    return steps_length(orth, diag, resolution);
}

std::vector<Cell> successors(const OccupancyGrid& grid, Cell from) {
    std::vector<Cell> out;
    out.reserve(8);
    for (const auto& m : kMoves) {
        const Cell to{from.col + m[0], from.row + m[1]};
        if (!grid.in_range(to) || grid.is_blocked(to)) continue;
        if (m[0] != 0 && m[1] != 0) {
            if (grid.is_blocked(Cell{from.col + m[0], from.row}) || grid.is_blocked(Cell{from.col, from.row + m[1]})) {
                continue;
            }
        }
        out.push_back(to);
    }
    return out;
}

PathResult astar_baseline(const OccupancyGrid& grid, Cell start, Cell goal) {
    check_endpoints(grid, start, goal);
    const std::size_t n = grid.size();
    const CellIndex s0 = grid.index(start);
    const CellIndex sg = grid.index(goal);

    std::vector<double> g(n, kInf);
    std::vector<std::ptrdiff_t> parent(n, -1);
    std::vector<bool> closed(n, false);
    OpenList open(n);

    g[s0] = 0.0;
    open.upsert(s0, euclid(grid, s0, goal), euclid(grid, s0, goal));
    std::size_t expansions = 0;

    while (!open.empty()) {
        const CellIndex s = open.top();
        open.remove(s);
        if (s == sg) {
            PathResult out;
            out.cells = trace_back(grid, parent, sg);
            out.cost = chain_length(out.cells, grid.resolution());
            out.expansions = expansions;
            out.planner = "astar";
            out.params = {{"connectivity", 8}};
            return out;
        }
        closed[s] = true;
        ++expansions;
        for (const Cell& c : successors(grid, grid.cell(s))) {
            const CellIndex t = grid.index(c);
            if (closed[t]) continue;
            const double ng = g[s] + move_length(grid.cell(s), c, grid.resolution());
            if (ng < g[t]) {
                g[t] = ng;
                parent[t] = static_cast<std::ptrdiff_t>(s);
                const double h = euclid(grid, t, goal);
                open.upsert(t, ng + h, h);
            }
        }
    }
    throw NoPathError("goal is unreachable from start");
}

PathResult mha_star(const OccupancyGrid& grid, const PotentialGrid& field, Cell start, Cell goal,
                    const PlannerParams& params) {
    params.validate();
    if (!field.matches(grid)) throw PlannerError("potential field dimensions do not match the grid");
    check_endpoints(grid, start, goal);

    const std::size_t n = grid.size();
    const CellIndex s0 = grid.index(start);
    const CellIndex sg = grid.index(goal);

    std::vector<double> g(n, kInf);
    std::vector<std::ptrdiff_t> parent(n, -1);
    std::vector<bool> closed_anchor(n, false);
    std::vector<bool> closed_inad(n, false);
    OpenList anchor(n);
    OpenList inad(n);

    auto h_anchor = [&](CellIndex s) { return euclid(grid, s, goal); };
    auto h_inad = [&](CellIndex s) { return euclid(grid, s, goal) + params.lambda * field[s]; };
    auto key_anchor = [&](CellIndex s) { return g[s] + params.w1 * h_anchor(s); };
    auto key_inad = [&](CellIndex s) { return g[s] + params.w1 * h_inad(s); };

    g[s0] = 0.0;
    anchor.upsert(s0, key_anchor(s0), h_anchor(s0));
    inad.upsert(s0, key_inad(s0), h_inad(s0));

    std::size_t expansions = 0;
    auto expand = [&](CellIndex s) {
        ++expansions;
        anchor.remove(s);
        inad.remove(s);
        for (const Cell& c : successors(grid, grid.cell(s))) {
            const CellIndex t = grid.index(c);
            const double ng = g[s] + edge_cost(grid, field, params, s, t);
            if (ng < g[t]) {
                g[t] = ng;
                parent[t] = static_cast<std::ptrdiff_t>(s);
                if (!closed_anchor[t]) {
                    anchor.upsert(t, key_anchor(t), h_anchor(t));
                    if (!closed_inad[t] && key_inad(t) <= params.w2 * key_anchor(t)) {
                        inad.upsert(t, key_inad(t), h_inad(t));
                    }
                }
            }
        }
    };

    auto finish = [&]() {
        PathResult out;
        out.cells = trace_back(grid, parent, sg);
        out.cost = path_cost(out.cells, field, grid, params);
        out.expansions = expansions;
        out.planner = "mha_star";
        out.params = params.to_json();
        return out;
    };

    while (!anchor.empty()) {
        if (!inad.empty() && inad.min_key() <= params.w2 * anchor.min_key()) {
            if (g[sg] <= inad.min_key()) return finish();
            const CellIndex s = inad.top();
            expand(s);
            closed_inad[s] = true;
        } else {
            if (g[sg] <= anchor.min_key()) return finish();
            const CellIndex s = anchor.top();
            expand(s);
            closed_anchor[s] = true;
        }
    }
    throw NoPathError("goal is unreachable from start");
}

double path_cost(const std::vector<Cell>& cells, const PotentialGrid& field, const OccupancyGrid& grid,
                 const PlannerParams& params) {
    // Geometric part first, so a zero field reports exactly the canonical length.
    const double length = chain_length(cells, grid.resolution());
    if (params.cost_mode == CostMode::HeuristicOnly) return length;
    double penalty = 0.0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const CellIndex u = grid.index(cells[i - 1]);
        const CellIndex v = grid.index(cells[i]);
        penalty += move_length(cells[i - 1], cells[i], grid.resolution()) * 0.5 * (field[u] + field[v]);
    }
    return length + params.beta * penalty;
}

nlohmann::json path_to_json(const PathResult& path, double resolution) {
    nlohmann::json cells = nlohmann::json::array();
    for (const Cell& c : path.cells) cells.push_back({c.col, c.row});
    return {{"cells", cells},
            {"cost", path.cost},
            {"length_m", chain_length(path.cells, resolution)},
            {"planner", path.planner},
            {"params", path.params},
            {"expansions", path.expansions}};
}

void check_path(const PathResult& path, const OccupancyGrid& grid, Cell start, Cell goal) {
    if (path.cells.empty()) throw PlannerError("empty path");
    if (path.cells.front() != start || path.cells.back() != goal) throw PlannerError("path endpoints differ");
    for (std::size_t i = 0; i < path.cells.size(); ++i) {
        const Cell c = path.cells[i];
        if (!grid.in_range(c) || grid.is_blocked(c)) throw PlannerError("path crosses a blocked cell");
        if (i == 0) continue;
        const auto succ = successors(grid, path.cells[i - 1]);
        if (std::find(succ.begin(), succ.end(), c) == succ.end()) throw PlannerError("path is not contiguous");
    }
}

}  // namespace promptnav
