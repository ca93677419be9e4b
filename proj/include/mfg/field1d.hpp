#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace mfg {

/// Scalar field on the periodic unit circle [0,1), n nodes at x_i = i/n.
struct ScalarField1D {
    int n = 0;
    Eigen::VectorXd values;

    double h() const { return 1.0 / n; }
    double node_x(int i) const { return static_cast<double>(i) / n; }

    double& operator[](int i) { return values[wrap(i)]; }
    double operator[](int i) const { return values[wrap(i)]; }

    int wrap(int i) const {
        int m = i % n;
        return m < 0 ? m + n : m;
    }

    double mass() const { return values.sum() / n; }

    /// periodic linear interpolation at x (any real, wrapped mod 1)
    double interp(double x) const;

    /// centered first difference (u_{i+1}-u_{i-1})/(2h), periodic
    Eigen::VectorXd gradient() const;
    /// second difference (u_{i+1}-2u_i+u_{i-1})/h^2, periodic
    Eigen::VectorXd laplacian() const;

    static ScalarField1D from_function(int n, const std::function<double(double)>& f);
    static ScalarField1D constant(int n, double v);
    static ScalarField1D uniform_density(int n) { return constant(n, 1.0); }

    /// normalizes nonnegative samples of f to a unit-mass density
    static ScalarField1D density_from_function(int n, const std::function<double(double)>& f);

    bool is_density(double tol = 1e-10) const;
};

/// Wasserstein-1 distance on the circle between two unit-mass densities on
/// the same grid. Uses the exact CDF formula: W1 = h * min_k sum_i |D_i - k|
/// with D the cumulative mass difference; the minimizing k is a median of D.
double wasserstein1_periodic(const ScalarField1D& m1, const ScalarField1D& m2);

/// Time-indexed scalar fields on the torus (densities or value functions).
struct ScalarTrajectory1D {
    std::vector<double> times;
    std::vector<ScalarField1D> fields;

    const ScalarField1D& at_time_index(std::size_t j) const { return fields[j]; }
};

} // namespace mfg
