#include "promptnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "promptnav/errors.hpp"

namespace promptnav {

namespace {

constexpr double kGeomEps = 1e-9;

using nlohmann::json;

int cell_count(double extent, double resolution) {
    const double ratio = extent / resolution;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) < 1e-9) return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(ratio));
}

double number_at(const json& node, const char* what) {
    if (!node.is_number()) throw SceneError(std::string("expected a number for ") + what);
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw SceneError(std::string("non-finite value for ") + what);
    return v;
}

Point2 point_at(const json& node, const char* what) {
    if (!node.is_array() || node.size() != 2) {
        throw SceneError(std::string("expected [x, y] for ") + what);
    }
    return {number_at(node[0], what), number_at(node[1], what)};
}

const json& member(const json& obj, const char* key, const char* where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SceneError(std::string("missing key \"") + key + "\" in " + where);
    return *it;
}

double cross(Point2 o, Point2 a, Point2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point2 p, Point2 a, Point2 b) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (std::abs(cross(a, b, p)) > kGeomEps * std::max(1.0, len)) return false;
    return p.x >= std::min(a.x, b.x) - kGeomEps && p.x <= std::max(a.x, b.x) + kGeomEps &&
           p.y >= std::min(a.y, b.y) - kGeomEps && p.y <= std::max(a.y, b.y) + kGeomEps;
}

int orientation(Point2 a, Point2 b, Point2 c) {
    const double v = cross(a, b, c);
    if (std::abs(v) <= kGeomEps) return 0;
    return v > 0 ? 1 : -1;
}

bool segments_touch(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    return on_segment(q1, p1, p2) || on_segment(q2, p1, p2) ||
           on_segment(p1, q1, q2) || on_segment(p2, q1, q2);
}

bool inside_box(Point2 p, const SceneSpec& s) {
    return p.x >= s.origin.x - kGeomEps && p.x <= s.origin.x + s.grid_width + kGeomEps &&
           p.y >= s.origin.y - kGeomEps && p.y <= s.origin.y + s.grid_height + kGeomEps;
}

}  // namespace

int SceneSpec::cols() const { return cell_count(grid_width, resolution); }
int SceneSpec::rows() const { return cell_count(grid_height, resolution); }

Cell SceneSpec::cell_of(Point2 p) const {
    Cell c{static_cast<int>(std::floor((p.x - origin.x) / resolution)),
           static_cast<int>(std::floor((p.y - origin.y) / resolution))};
    // Points on the far boundary belong to the last cell.
    c.col = std::clamp(c.col, 0, std::max(cols() - 1, 0));
    c.row = std::clamp(c.row, 0, std::max(rows() - 1, 0));
    return c;
}

Point2 SceneSpec::cell_center(Cell c) const {
    return {origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
}

std::vector<std::string> SceneSpec::families() const {
    std::vector<std::string> out;
    for (const auto& ob : obstacles) {
        if (std::find(out.begin(), out.end(), ob.family) == out.end()) out.push_back(ob.family);
    }
    return out;
}

bool point_in_polygon(Point2 p, const std::vector<Point2>& polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool polygon_self_intersects(const std::vector<Point2>& polygon) {
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a1 = polygon[i];
        const Point2 a2 = polygon[(i + 1) % n];
        if (std::hypot(a2.x - a1.x, a2.y - a1.y) <= kGeomEps) return true;  // repeated vertex
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_touch(a1, a2, polygon[j], polygon[(j + 1) % n])) return true;
        }
    }
    return false;
}

SceneSpec scene_from_json(const json& doc) {
    if (!doc.is_object()) throw SceneError("scene document must be a JSON object");
    SceneSpec s;

    const json& grid = member(doc, "grid", "scene");
    if (!grid.is_object()) throw SceneError("\"grid\" must be an object");
    s.grid_width = number_at(member(grid, "width_m", "grid"), "grid.width_m");
    s.grid_height = number_at(member(grid, "height_m", "grid"), "grid.height_m");
    if (auto it = grid.find("resolution_m"); it != grid.end()) {
        s.resolution = number_at(*it, "grid.resolution_m");
    }
    if (auto it = grid.find("origin"); it != grid.end()) s.origin = point_at(*it, "grid.origin");

    if (s.resolution <= 0.0) throw SceneError("resolution must be positive");
    if (s.grid_width <= 0.0 || s.grid_height <= 0.0) throw SceneError("grid dimensions must be positive");

    s.start = point_at(member(doc, "start", "scene"), "start");
    s.goal = point_at(member(doc, "goal", "scene"), "goal");
    if (!inside_box(s.start, s)) throw SceneError("start lies outside the grid bounds");
    if (!inside_box(s.goal, s)) throw SceneError("goal lies outside the grid bounds");

    std::set<std::string> seen;
    if (auto it = doc.find("obstacles"); it != doc.end()) {
        if (!it->is_array()) throw SceneError("\"obstacles\" must be an array");
        for (const json& item : *it) {
            if (!item.is_object()) throw SceneError("obstacle entries must be objects");
            Obstacle ob;
            const json& id = member(item, "id", "obstacle");
            const json& family = member(item, "family", "obstacle");
            if (!id.is_string() || !family.is_string()) {
                throw SceneError("obstacle id and family must be strings");
            }
            ob.id = id.get<std::string>();
            ob.family = family.get<std::string>();
            if (!seen.insert(ob.id).second) throw SceneError("duplicate obstacle id \"" + ob.id + "\"");

            const json& fp = member(item, "footprint", "obstacle");
            if (!fp.is_array()) throw SceneError("footprint of \"" + ob.id + "\" must be an array");
            for (const json& v : fp) ob.footprint.push_back(point_at(v, "footprint vertex"));
            // A closing vertex equal to the first is accepted and dropped.
            if (ob.footprint.size() > 3 && ob.footprint.front() == ob.footprint.back()) {
                ob.footprint.pop_back();
            }
            if (ob.footprint.size() < 3) {
                throw SceneError("degenerate footprint for \"" + ob.id + "\": fewer than 3 vertices");
            }
            for (const Point2& v : ob.footprint) {
                if (!inside_box(v, s)) throw SceneError("footprint of \"" + ob.id + "\" leaves the grid bounds");
            }
            if (polygon_self_intersects(ob.footprint)) {
                throw SceneError("footprint of \"" + ob.id + "\" is self-intersecting");
            }
            s.obstacles.push_back(std::move(ob));
        }
    }

    for (const Obstacle& ob : s.obstacles) {
        if (point_in_polygon(s.cell_center(s.cell_of(s.start)), ob.footprint)) {
            throw SceneError("start cell is blocked by \"" + ob.id + "\"");
        }
        if (point_in_polygon(s.cell_center(s.cell_of(s.goal)), ob.footprint)) {
            throw SceneError("goal cell is blocked by \"" + ob.id + "\"");
        }
    }
    return s;
}

SceneSpec parse_scene(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SceneError(std::string("malformed scene document: ") + e.what());
    }
    return scene_from_json(doc);
}

json scene_to_json(const SceneSpec& s) {
    json obstacles = json::array();
    for (const Obstacle& ob : s.obstacles) {
        json fp = json::array();
        for (const Point2& v : ob.footprint) fp.push_back({v.x, v.y});
        obstacles.push_back({{"id", ob.id}, {"family", ob.family}, {"footprint", fp}});
    }
    return {
        {"grid", {{"width_m", s.grid_width}, {"height_m", s.grid_height},
                  {"resolution_m", s.resolution}, {"origin", {s.origin.x, s.origin.y}}}},
        {"start", {s.start.x, s.start.y}},
        {"goal", {s.goal.x, s.goal.y}},
        {"obstacles", obstacles},
    };
}

OccupancyGrid::OccupancyGrid(int cols, int rows, double resolution, Point2 origin)
    : cols_(cols), rows_(rows), resolution_(resolution), origin_(origin),
      blocked_mask_(static_cast<std::size_t>(cols) * rows, 0) {}

void OccupancyGrid::add_obstacle(const std::string& id, const std::string& family,
                                 std::vector<CellIndex> cells) {
    auto& slot = per_obstacle_[id];
    families_[id] = family;
    slot.insert(slot.end(), cells.begin(), cells.end());
    std::sort(slot.begin(), slot.end());
    slot.erase(std::unique(slot.begin(), slot.end()), slot.end());

    bool changed = false;
    for (CellIndex c : slot) {
        if (!blocked_mask_[c]) {
            blocked_mask_[c] = 1;
            changed = true;
        }
    }
    if (changed) {
        blocked_.clear();
        for (CellIndex i = 0; i < blocked_mask_.size(); ++i) {
            if (blocked_mask_[i]) blocked_.push_back(i);
        }
    }
}

OccupancyGrid rasterize(const SceneSpec& spec) {
    OccupancyGrid grid(spec.cols(), spec.rows(), spec.resolution, spec.origin);
    for (const Obstacle& ob : spec.obstacles) {
        double min_x = ob.footprint.front().x, max_x = min_x;
        double min_y = ob.footprint.front().y, max_y = min_y;
        for (const Point2& v : ob.footprint) {
            min_x = std::min(min_x, v.x);
            max_x = std::max(max_x, v.x);
            min_y = std::min(min_y, v.y);
            max_y = std::max(max_y, v.y);
        }
        const Cell lo = spec.cell_of({min_x - spec.resolution, min_y - spec.resolution});
        const Cell hi = spec.cell_of({max_x + spec.resolution, max_y + spec.resolution});

        std::vector<CellIndex> cells;
        for (int row = lo.row; row <= hi.row; ++row) {
            for (int col = lo.col; col <= hi.col; ++col) {
                if (point_in_polygon(spec.cell_center({col, row}), ob.footprint)) {
                    cells.push_back(grid.index({col, row}));
                }
            }
        }
        grid.add_obstacle(ob.id, ob.family, std::move(cells));
    }
    return grid;
}

}  // namespace promptnav
