#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace mfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform tensor grid on a box [lower, upper] in dimension d <= 4.
/// Node i along an axis sits at lower + i*spacing; flat indices run with
/// axis 0 fastest.
struct Grid {
    Vec lower;
    Vec upper;
    std::vector<int> nodes_per_axis;
    Vec spacing;

    int dim() const { return static_cast<int>(nodes_per_axis.size()); }

    long node_count() const {
        long n = 1;
        for (int k : nodes_per_axis) n *= k;
        return n;
    }

    double max_spacing() const { return spacing.maxCoeff(); }
    double min_spacing() const { return spacing.minCoeff(); }

    /// Euclidean diameter of the box.
    double diameter() const { return (upper - lower).norm(); }

    std::vector<int> multi_index(long flat) const {
        std::vector<int> idx(nodes_per_axis.size());
        for (std::size_t a = 0; a < nodes_per_axis.size(); ++a) {
            idx[a] = static_cast<int>(flat % nodes_per_axis[a]);
            flat /= nodes_per_axis[a];
        }
        return idx;
    }

    long flat_index(const std::vector<int>& idx) const {
        long flat = 0;
        for (std::size_t a = nodes_per_axis.size(); a-- > 0;)
            flat = flat * nodes_per_axis[a] + idx[a];
        return flat;
    }

    Vec node_coordinate(long flat) const {
        Vec x(dim());
        for (int a = 0; a < dim(); ++a) {
            x[a] = lower[a] + spacing[a] * static_cast<double>(flat % nodes_per_axis[a]);
            flat /= nodes_per_axis[a];
        }
        return x;
    }

    /// flat index of the neighbor along `axis` offset by `step` (+1/-1),
    /// or -1 when the neighbor falls outside the box.
    long neighbor(long flat, int axis, int step) const;

    bool contains(const Vec& p) const {
        for (int a = 0; a < dim(); ++a)
            if (p[a] < lower[a] || p[a] > upper[a]) return false;
        return true;
    }

    bool same_as(const Grid& other) const;
};

Grid build_grid(const Vec& lower, const Vec& upper, const std::vector<int>& nodes_per_axis);

/// Values of a vector-valued map on the grid: row = node, column = component.
/// The master-equation unknown U carries d components on a d-dimensional grid,
/// but the component count is independent of the grid dimension here.
struct ValueField {
    Grid grid;
    Mat values; // node_count x components

    int components() const { return static_cast<int>(values.cols()); }

    Vec at(long node) const { return values.row(node).transpose(); }

    double max_abs() const { return values.cwiseAbs().maxCoeff(); }

    bool all_finite() const { return values.allFinite(); }

    static ValueField from_function(const Grid& g, int components,
                                    const std::function<Vec(const Vec&)>& f);
    static ValueField constant(const Grid& g, const Vec& value);
};

/// Multilinear interpolation of each component at `point`; points outside the
/// box are clamped to the box first, so evaluation is total.
Vec interpolate(const ValueField& field, const Vec& point);

/// sup over nodes of the max-norm difference of two fields on the same grid.
double sup_distance(const ValueField& a, const ValueField& b);

} // namespace mfg
