#pragma once

#include <variant>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

/// Affine population jump T(x) = S x + e. For affine T the differential is S
/// everywhere, so the value pullback is x -> S^T U(S x + e).
struct AffineJump {
    Mat S;
    Vec e;
    double op_norm_S = 0.0;

    Vec apply(const Vec& x) const { return S * x + e; }

    int dim() const { return static_cast<int>(S.rows()); }

    /// Validates shapes and computes the operator norm of S by power
    /// iteration on S^T S (deterministic start vector).
    static AffineJump make(const Mat& S, const Vec& e);
    static AffineJump identity(int d);
};

/// Operator norm estimate by power iteration; exposed so the construction
/// invariant can be cross-checked independently.
double power_iteration_norm(const Mat& S, int max_iter = 500, double tol = 1e-14);

struct NoiseNone {};

/// single jump at the deterministic time t1
struct DeterministicJump {
    double t1;
    AffineJump J;
};

/// all players jump together at Poisson(rate) times
struct CommonPoisson {
    double rate;
    AffineJump J;
};

/// players jump at i.i.d. Poisson(rate) times; in the continuum this becomes
/// a drift rate*(x - T(x)) plus the zero-order term rate*(Id - S^T)U
struct IidPoisson {
    double rate;
    AffineJump J;
};

struct MixtureAtom {
    AffineJump J;
    double weight;
};

/// finite atomic control measure over affine jumps, total weight 1
struct Mixture {
    double rate;
    std::vector<MixtureAtom> atoms;
};

using NoiseSpec = std::variant<NoiseNone, DeterministicJump, CommonPoisson, IidPoisson, Mixture>;

/// Validates rates/weights (weights must sum to 1 within 1e-12, rates and t1
/// nonnegative). Returns its argument so literals can be wrapped inline.
NoiseSpec validate_noise(NoiseSpec spec);

} // namespace mfg
