#pragma once
// Scene document parsing and obstacle rasterization.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace promptnav {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Column/row address of a grid cell. Column runs along +x, row along +y.
struct Cell {
    int col = 0;
    int row = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

using CellIndex = std::size_t;

struct Obstacle {
    std::string id;
    std::string family;
    std::vector<Point2> footprint;
};

struct SceneSpec {
    static constexpr double kDefaultResolution = 0.1;

    double grid_width = 0.0;
    double grid_height = 0.0;
    double resolution = kDefaultResolution;
    Point2 origin;
    std::vector<Obstacle> obstacles;
    Point2 start;
    Point2 goal;

    int cols() const;
    int rows() const;

    /// Cell containing a world point (no bounds check).
    Cell cell_of(Point2 p) const;
    Point2 cell_center(Cell c) const;

    /// Distinct family names in first-appearance order.
    std::vector<std::string> families() const;
};

/// Parse and validate a scene document. Throws SceneError.
SceneSpec parse_scene(std::string_view document);
SceneSpec scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const SceneSpec& spec);

/// Even-odd point-in-polygon; points on an edge count as inside.
bool point_in_polygon(Point2 p, const std::vector<Point2>& polygon);

/// True when two non-adjacent edges of the closed polygon touch or cross.
bool polygon_self_intersects(const std::vector<Point2>& polygon);

/// Rasterized scene. Cell indices are row-major: index = row * cols + col.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(int cols, int rows, double resolution, Point2 origin = {});

    /// Register obstacle cells. Duplicate ids are merged.
    void add_obstacle(const std::string& id, const std::string& family,
                      std::vector<CellIndex> cells);

    int cols() const { return cols_; }
    int rows() const { return rows_; }
    std::size_t size() const { return static_cast<std::size_t>(cols_) * rows_; }
    double resolution() const { return resolution_; }
    Point2 origin() const { return origin_; }

    bool in_range(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < cols_ && c.row < rows_; }
    CellIndex index(Cell c) const { return static_cast<CellIndex>(c.row) * cols_ + c.col; }
    Cell cell(CellIndex idx) const {
        return {static_cast<int>(idx % cols_), static_cast<int>(idx / cols_)};
    }

    bool is_blocked(CellIndex idx) const { return blocked_mask_[idx] != 0; }
    bool is_blocked(Cell c) const { return is_blocked(index(c)); }

    /// Obstacle id → sorted cell set. Iteration order is ascending id.
    const std::map<std::string, std::vector<CellIndex>>& per_obstacle_cells() const { return per_obstacle_; }
    const std::map<std::string, std::string>& obstacle_families() const { return families_; }

    /// Sorted union of all obstacle cells.
    const std::vector<CellIndex>& blocked() const { return blocked_; }

    friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

private:
    int cols_ = 0;
    int rows_ = 0;
    double resolution_ = SceneSpec::kDefaultResolution;
    Point2 origin_;
    std::map<std::string, std::vector<CellIndex>> per_obstacle_;
    std::map<std::string, std::string> families_;
    std::vector<std::uint8_t> blocked_mask_;
    std::vector<CellIndex> blocked_;
};

/// Cells whose centers lie inside or on an obstacle footprint.
OccupancyGrid rasterize(const SceneSpec& spec);

}  // namespace promptnav
