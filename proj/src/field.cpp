#include "promptnav/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "promptnav/errors.hpp"

namespace promptnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One pass of the 1D lower-envelope transform over `n` samples spaced by `stride`.
void transform_1d(double* data, int n, std::ptrdiff_t stride, std::vector<double>& f,
                  std::vector<int>& v, std::vector<double>& z) {
    f.resize(n);
    v.resize(n);
    z.resize(n + 1);
    for (int q = 0; q < n; ++q) f[q] = data[q * stride];

    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        auto intersect = [&](int p) {
            return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
        };
        double s = intersect(v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) return;  // no features along this line

    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        data[q * stride] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::string to_string(FieldMode mode) {
    return mode == FieldMode::ScaleKrep ? "scale_krep" : "scale_dmax";
}

FieldMode field_mode_from_string(const std::string& s) {
    if (s == "scale_krep") return FieldMode::ScaleKrep;
    if (s == "scale_dmax") return FieldMode::ScaleDmax;
    throw FieldError("unknown field mode \"" + s + "\"");
}

FieldParams FieldParams::uniform(const OccupancyGrid& grid, double k_rep, double d_max) {
    FieldParams p;
    p.d_max = d_max;
    for (const auto& [id, cells] : grid.per_obstacle_cells()) p.per_obstacle[id] = {k_rep, d_max};
    return p;
}

void FieldParams::validate() const {
    if (!(d_max > 0.0) || !std::isfinite(d_max)) throw FieldError("d_max must be positive and finite");
    for (const auto& [id, c] : per_obstacle) {
        if (!std::isfinite(c.k_rep) || c.k_rep < 0.0) {
            throw FieldError("k_rep for \"" + id + "\" must be finite and >= 0");
        }
        if (!(c.d_max > 0.0) || !std::isfinite(c.d_max)) {
            throw FieldError("d_max for \"" + id + "\" must be positive and finite");
        }
    }
}

double PotentialGrid::max_value() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
}

std::optional<double> distance_to_obstacle(CellIndex cell, std::span<const CellIndex> obstacle_cells,
                                           const OccupancyGrid& grid) {
    if (obstacle_cells.empty()) return std::nullopt;
    const Cell q = grid.cell(cell);
    long best = std::numeric_limits<long>::max();
    for (CellIndex idx : obstacle_cells) {
        const Cell c = grid.cell(idx);
        const long dc = c.col - q.col;
        const long dr = c.row - q.row;
        best = std::min(best, dc * dc + dr * dr);
        if (best == 0) break;
    }
    return std::sqrt(static_cast<double>(best)) * grid.resolution();
}

double repulsive_potential(double distance, double k_rep, double d_max) {
    if (distance < d_max) return k_rep * std::exp(-distance);
    return 0.0;
}

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> mask, int cols, int rows) {
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 0.0 : kInf;

    std::vector<double> f;
    std::vector<int> v;
    std::vector<double> z;
    for (int c = 0; c < cols; ++c) transform_1d(out.data() + c, rows, cols, f, v, z);
    for (int r = 0; r < rows; ++r) transform_1d(out.data() + static_cast<std::ptrdiff_t>(r) * cols, cols, 1, f, v, z);
    return out;
}

PotentialGrid build_field(const OccupancyGrid& grid, const FieldParams& params) {
    params.validate();
    for (const auto& [id, cells] : grid.per_obstacle_cells()) {
        if (!params.per_obstacle.contains(id)) throw FieldError("missing coefficient for obstacle \"" + id + "\"");
    }

    PotentialGrid field(grid.cols(), grid.rows(), grid.resolution());
    const double res = grid.resolution();

    // std::map iteration gives the ascending-id summation order.
    for (const auto& [id, cells] : grid.per_obstacle_cells()) {
        const ObstacleCoefficients coeff = params.per_obstacle.at(id);
        if (cells.empty() || coeff.k_rep == 0.0) continue;

        // Cells more than `margin` cells away on either axis are beyond the cutoff.
        const int margin = static_cast<int>(std::ceil(coeff.d_max / res)) + 1;
        Cell lo = grid.cell(cells.front());
        Cell hi = lo;
        for (CellIndex idx : cells) {
            const Cell c = grid.cell(idx);
            lo.col = std::min(lo.col, c.col);
            lo.row = std::min(lo.row, c.row);
            hi.col = std::max(hi.col, c.col);
            hi.row = std::max(hi.row, c.row);
        }
        lo = {std::max(lo.col - margin, 0), std::max(lo.row - margin, 0)};
        hi = {std::min(hi.col + margin, grid.cols() - 1), std::min(hi.row + margin, grid.rows() - 1)};
        const int w = hi.col - lo.col + 1;
        const int h = hi.row - lo.row + 1;

        std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
        for (CellIndex idx : cells) {
            const Cell c = grid.cell(idx);
            mask[static_cast<std::size_t>(c.row - lo.row) * w + (c.col - lo.col)] = 1;
        }
        const std::vector<double> d2 = squared_distance_transform(mask, w, h);

        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double d = std::sqrt(d2[static_cast<std::size_t>(r) * w + c]) * res;
                field[grid.index({lo.col + c, lo.row + r})] += repulsive_potential(d, coeff.k_rep, coeff.d_max);
            }
        }
    }
    return field;
}

std::optional<double> min_distance_any(CellIndex cell, const OccupancyGrid& grid) {
    return distance_to_obstacle(cell, grid.blocked(), grid);
}

nlohmann::json field_to_json(const PotentialGrid& field) {
    return {{"cols", field.cols()},
            {"rows", field.rows()},
            {"resolution_m", field.resolution()},
            {"values", std::vector<double>(field.values().begin(), field.values().end())}};
}

PotentialGrid field_from_json(const nlohmann::json& doc) {
    try {
        const int cols = doc.at("cols").get<int>();
        const int rows = doc.at("rows").get<int>();
        const auto values = doc.at("values").get<std::vector<double>>();
        if (cols <= 0 || rows <= 0 || values.size() != static_cast<std::size_t>(cols) * rows) {
            throw FieldError("field dimensions do not match value count");
        }
        PotentialGrid field(cols, rows, doc.at("resolution_m").get<double>());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || values[i] < 0.0) throw FieldError("field values must be finite and >= 0");
            field[i] = values[i];
        }
        return field;
    } catch (const nlohmann::json::exception& e) {
        throw FieldError(std::string("malformed field document: ") + e.what());
    }
}

std::array<std::uint8_t, 3> heat_color(double value, double top) {
    const double t = std::clamp(value / top, 0.0, 1.0);
    return {static_cast<std::uint8_t>(std::lround(255.0 * t)), 0,
            static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)))};
}

std::string field_to_ppm(const PotentialGrid& field, double top) {
    std::string out = "P6\n" + std::to_string(field.cols()) + " " + std::to_string(field.rows()) + "\n255\n";
    out.reserve(out.size() + field.size() * 3);
    for (int r = field.rows() - 1; r >= 0; --r) {
        for (int c = 0; c < field.cols(); ++c) {
            const auto rgb = heat_color(field[static_cast<std::size_t>(r) * field.cols() + c], top);
            out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
        }
    }
    return out;
}

}  // namespace promptnav
