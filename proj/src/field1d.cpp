#include "mfg/field1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

double ScalarField1D::interp(double x) const {
    double s = (x - std::floor(x)) * n;
    int i = static_cast<int>(std::floor(s));
    double w = s - i;
    if (w < 1e-12) w = 0.0;
    if (w > 1.0 - 1e-12) { w = 0.0; ++i; }
    return (1.0 - w) * (*this)[i] + w * (*this)[i + 1];
}

Eigen::VectorXd ScalarField1D::gradient() const {
    Eigen::VectorXd g(n);
    const double inv2h = 0.5 * n;
    for (int i = 0; i < n; ++i) g[i] = ((*this)[i + 1] - (*this)[i - 1]) * inv2h;
    return g;
}

Eigen::VectorXd ScalarField1D::laplacian() const {
    Eigen::VectorXd l(n);
    const double invh2 = static_cast<double>(n) * n;
    for (int i = 0; i < n; ++i)
        l[i] = ((*this)[i + 1] - 2.0 * values[i] + (*this)[i - 1]) * invh2;
    return l;
}

ScalarField1D ScalarField1D::from_function(int n, const std::function<double(double)>& f) {
    if (n < 2) throw std::invalid_argument("ScalarField1D: need n >= 2 nodes");
    ScalarField1D u;
    u.n = n;
    u.values = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) u.values[i] = f(u.node_x(i));
    return u;
}

ScalarField1D ScalarField1D::constant(int n, double v) {
    if (n < 2) throw std::invalid_argument("ScalarField1D: need n >= 2 nodes");
    ScalarField1D u;
    u.n = n;
    u.values = Eigen::VectorXd::Constant(n, v);
    return u;
}

ScalarField1D ScalarField1D::density_from_function(int n, const std::function<double(double)>& f) {
    ScalarField1D m = from_function(n, f);
    if (m.values.minCoeff() < 0.0)
        throw std::invalid_argument("density_from_function: negative sample");
    double total = m.mass();
    if (total <= 0.0)
        throw std::invalid_argument("density_from_function: zero mass");
    m.values /= total;
    return m;
}

bool ScalarField1D::is_density(double tol) const {
    return values.minCoeff() >= -tol && std::abs(mass() - 1.0) <= tol;
}

double wasserstein1_periodic(const ScalarField1D& m1, const ScalarField1D& m2) {
    if (m1.n != m2.n)
        throw std::invalid_argument("wasserstein1_periodic: densities on different grids");
    if (!m1.is_density(1e-8) || !m2.is_density(1e-8))
        throw std::invalid_argument("wasserstein1_periodic: inputs are not unit-mass densities");

    const int n = m1.n;
    const double h = m1.h();
    std::vector<double> D(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += (m1.values[i] - m2.values[i]) * h;
        D[i] = acc;
    }
    std::vector<double> sorted = D;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    double k = sorted[n / 2];
    // for even n either middle value minimizes; the sum below is identical
    double w1 = 0.0;
    for (double d : D) w1 += std::abs(d - k);
    return w1 * h;
}

} // namespace mfg
