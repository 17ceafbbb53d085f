#pragma once
// Exponential repulsive potential over the planning grid.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptnav/scene.hpp"

namespace promptnav {

/// How a danger posterior is injected into the field.
enum class FieldMode { ScaleKrep, ScaleDmax };

std::string to_string(FieldMode mode);
FieldMode field_mode_from_string(const std::string& s);

struct ObstacleCoefficients {
    double k_rep = 0.0;
    double d_max = 5.0;
};

struct FieldParams {
    static constexpr double kDefaultDmax = 5.0;

    /// Per obstacle id. Every obstacle of the grid must be present.
    std::map<std::string, ObstacleCoefficients> per_obstacle;
    double d_max = kDefaultDmax;
    FieldMode mode = FieldMode::ScaleKrep;

    /// Same k_rep for every obstacle of `grid`, cutoff `d_max`.
    static FieldParams uniform(const OccupancyGrid& grid, double k_rep, double d_max = kDefaultDmax);

    /// Throws FieldError on negative/non-finite k_rep or non-positive d_max.
    void validate() const;
};

class PotentialGrid {
public:
    PotentialGrid() = default;
    PotentialGrid(int cols, int rows, double resolution)
        : cols_(cols), rows_(rows), resolution_(resolution),
          values_(static_cast<std::size_t>(cols) * rows, 0.0) {}

    int cols() const { return cols_; }
    int rows() const { return rows_; }
    double resolution() const { return resolution_; }
    std::size_t size() const { return values_.size(); }

    double operator[](CellIndex i) const { return values_[i]; }
    double& operator[](CellIndex i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    double max_value() const;

    bool matches(const OccupancyGrid& grid) const {
        return cols_ == grid.cols() && rows_ == grid.rows();
    }

    friend bool operator==(const PotentialGrid&, const PotentialGrid&) = default;

private:
    int cols_ = 0;
    int rows_ = 0;
    double resolution_ = 0.0;
    std::vector<double> values_;
};

/// Center-to-center Euclidean distance from `cell` to the nearest cell of
/// `obstacle_cells`; nullopt when the set is empty.
std::optional<double> distance_to_obstacle(CellIndex cell, std::span<const CellIndex> obstacle_cells,
                                           const OccupancyGrid& grid);

/// k_rep * exp(-distance) inside the cutoff, 0 outside.
double repulsive_potential(double distance, double k_rep, double d_max);

/// Sum of every obstacle's repulsive potential per cell, summed in ascending id order.
PotentialGrid build_field(const OccupancyGrid& grid, const FieldParams& params);

/// Distance from `cell` to the nearest blocked cell; nullopt if nothing is blocked.
std::optional<double> min_distance_any(CellIndex cell, const OccupancyGrid& grid);

/// Exact squared Euclidean distance transform (in cells²) of a binary mask
/// using the lower-envelope-of-parabolas method. Feature cells are `mask != 0`;
/// cells with no feature anywhere get +inf.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> mask, int cols, int rows);

nlohmann::json field_to_json(const PotentialGrid& field);
PotentialGrid field_from_json(const nlohmann::json& doc);

/// Binary PPM (P6) heatmap, 0 → blue and >= `top` → red, top image row = highest grid row.
std::string field_to_ppm(const PotentialGrid& field, double top = 5.0);

/// RGB for a potential value on the blue→red scale.
std::array<std::uint8_t, 3> heat_color(double value, double top = 5.0);

}  // namespace promptnav
