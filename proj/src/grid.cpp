#include "mfg/grid.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace mfg {

long Grid::neighbor(long flat, int axis, int step) const {
    long stride = 1;
    for (int a = 0; a < axis; ++a) stride *= nodes_per_axis[a];
    int i = static_cast<int>((flat / stride) % nodes_per_axis[axis]);
    int j = i + step;
    if (j < 0 || j >= nodes_per_axis[axis]) return -1;
    return flat + static_cast<long>(step) * stride;
}

bool Grid::same_as(const Grid& other) const {
    return nodes_per_axis == other.nodes_per_axis &&
           lower.isApprox(other.lower) && upper.isApprox(other.upper);
}

Grid build_grid(const Vec& lower, const Vec& upper, const std::vector<int>& nodes_per_axis) {
    const int d = static_cast<int>(nodes_per_axis.size());
    if (d < 1 || d > 4)
        throw std::invalid_argument("build_grid: dimension must be between 1 and 4, got " +
                                    std::to_string(d));
    if (lower.size() != d || upper.size() != d)
        throw std::invalid_argument("build_grid: bound dimensions do not match nodes_per_axis");
    Grid g;
    g.lower = lower;
    g.upper = upper;
    g.nodes_per_axis = nodes_per_axis;
    g.spacing = Vec(d);
    for (int a = 0; a < d; ++a) {
        if (!(upper[a] > lower[a]))
            throw std::invalid_argument("build_grid: degenerate axis " + std::to_string(a) +
                                        " (upper must exceed lower)");
        if (nodes_per_axis[a] < 2)
            throw std::invalid_argument("build_grid: axis " + std::to_string(a) +
                                        " needs at least 2 nodes");
        g.spacing[a] = (upper[a] - lower[a]) / (nodes_per_axis[a] - 1);
    }
    return g;
}

ValueField ValueField::from_function(const Grid& g, int components,
                                     const std::function<Vec(const Vec&)>& f) {
    ValueField field;
    field.grid = g;
    field.values = Mat(g.node_count(), components);
    for (long i = 0; i < g.node_count(); ++i) {
        Vec v = f(g.node_coordinate(i));
        if (v.size() != components)
            throw std::invalid_argument("ValueField::from_function: component count mismatch");
        field.values.row(i) = v.transpose();
    }
    return field;
}

ValueField ValueField::constant(const Grid& g, const Vec& value) {
    ValueField field;
    field.grid = g;
    field.values = Mat(g.node_count(), value.size());
    field.values.rowwise() = value.transpose();
    return field;
}

Vec interpolate(const ValueField& field, const Vec& point) {
    const Grid& g = field.grid;
    const int d = g.dim();
    if (point.size() != d)
        throw std::invalid_argument("interpolate: point dimension mismatch");

    // Per axis: clamp, locate the cell, and compute the fractional weight.
    // Weights within 1e-10 of a node are snapped so that node coordinates
    // reproduce stored values exactly (identity jumps must cancel exactly).
    std::vector<int> cell(d);
    std::vector<double> w(d);
    for (int a = 0; a < d; ++a) {
        double p = std::min(std::max(point[a], g.lower[a]), g.upper[a]);
        double s = (p - g.lower[a]) / g.spacing[a];
        int i = static_cast<int>(std::floor(s));
        i = std::min(std::max(i, 0), g.nodes_per_axis[a] - 2);
        double frac = s - i;
        if (frac < 1e-10) frac = 0.0;
        if (frac > 1.0 - 1e-10) frac = 1.0;
        cell[a] = i;
        w[a] = frac;
    }

    Vec result = Vec::Zero(field.components());
    const int corners = 1 << d;
    std::vector<int> idx(d);
    for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        for (int a = 0; a < d; ++a) {
            const bool high = (c >> a) & 1;
            weight *= high ? w[a] : (1.0 - w[a]);
            idx[a] = cell[a] + (high ? 1 : 0);
        }
        if (weight == 0.0) continue;
        result += weight * field.values.row(g.flat_index(idx)).transpose();
    }
    return result;
}

double sup_distance(const ValueField& a, const ValueField& b) {
    if (!a.grid.same_as(b.grid) || a.components() != b.components())
        throw std::invalid_argument("sup_distance: fields live on different grids");
    return (a.values - b.values).cwiseAbs().maxCoeff();
}

} // namespace mfg
