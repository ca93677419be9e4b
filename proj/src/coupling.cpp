#include "mfg/coupling.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace mfg {

namespace {

Coupling linear_impl(const Mat& A, const Mat& B, const Mat& C, const Mat& D, bool certify) {
    const int d = static_cast<int>(A.rows());
    if (A.cols() != d || B.rows() != d || B.cols() != d || C.rows() != d || C.cols() != d ||
        D.rows() != d || D.cols() != d)
        throw std::invalid_argument("Coupling::linear: all blocks must be d x d");

    Coupling c;
    c.G = [A, B](const Vec& x, const Vec& u) -> Vec { return A * x + B * u; };
    c.F = [C, D](const Vec& x, const Vec& u) -> Vec { return C * x + D * u; };
    c.lip_G_x = A.operatorNorm();
    c.lip_G_u = B.operatorNorm();
    c.lip_F_x = C.operatorNorm();
    c.lip_F_u = D.operatorNorm();

    if (certify) {
        Mat block(2 * d, 2 * d);
        block.topLeftCorner(d, d) = A;
        block.topRightCorner(d, d) = B;
        block.bottomLeftCorner(d, d) = C;
        block.bottomRightCorner(d, d) = D;
        Mat sym = 0.5 * (block + block.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(sym);
        double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -1e-10)
            throw std::invalid_argument(
                "Coupling::linear: symmetric part of [[A,B],[C,D]] is not PSD "
                "(min eigenvalue " + std::to_string(min_eig) + ")");
        c.certificate = LinearBlockCertificate{A, B, C, D, std::max(min_eig, 0.0)};
    }
    return c;
}

} // namespace

Coupling Coupling::linear(const Mat& A, const Mat& B, const Mat& C, const Mat& D) {
    return linear_impl(A, B, C, D, true);
}

Coupling Coupling::linear_unverified(const Mat& A, const Mat& B, const Mat& C, const Mat& D) {
    return linear_impl(A, B, C, D, false);
}

Coupling Coupling::zero(int d) {
    Mat z = Mat::Zero(d, d);
    return linear(z, z, z, z);
}

} // namespace mfg
