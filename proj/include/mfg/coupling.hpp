#pragma once

#include <functional>
#include <variant>

#include "mfg/grid.hpp"

namespace mfg {

/// Certifies G(x,u) = A x + B u, F(x,u) = C x + D u with the symmetric part
/// of [[A,B],[C,D]] positive semidefinite, i.e. (G,F) : R^{2d} -> R^{2d}
/// is a monotone map. Checked numerically at construction.
struct LinearBlockCertificate {
    Mat A, B, C, D;
    double alpha = 0.0; // smallest eigenvalue of the symmetric part (>= 0)
};

/// (G,F) is the gradient of a convex potential on R^{2d}.
struct ConvexGradientCertificate {
    std::function<double(const Vec& x, const Vec& u)> potential;
};

struct Unverified {};

using MonotonicityCertificate =
    std::variant<LinearBlockCertificate, ConvexGradientCertificate, Unverified>;

/// The pair (F, G) of the master equation together with Lipschitz constants
/// in each argument and an optional monotonicity certificate.
struct Coupling {
    std::function<Vec(const Vec& x, const Vec& u)> F;
    std::function<Vec(const Vec& x, const Vec& u)> G;
    double lip_F_x = 0.0, lip_F_u = 0.0;
    double lip_G_x = 0.0, lip_G_u = 0.0;
    MonotonicityCertificate certificate = Unverified{};

    bool certified_monotone() const {
        return !std::holds_alternative<Unverified>(certificate);
    }

    /// Builds the linear coupling G = Ax + Bu, F = Cx + Du, computes the
    /// Lipschitz constants as operator norms and verifies the monotonicity
    /// certificate (throws when the symmetric block is not PSD).
    static Coupling linear(const Mat& A, const Mat& B, const Mat& C, const Mat& D);

    /// Same matrices but skips the PSD requirement: certificate is Unverified.
    static Coupling linear_unverified(const Mat& A, const Mat& B, const Mat& C, const Mat& D);

    static Coupling zero(int d);
};

} // namespace mfg
