#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfg/coupling.hpp"
#include "mfg/grid.hpp"
#include "mfg/jumps.hpp"

namespace mfg {

struct SchemeMeta {
    double dt = 0.0;
    double h = 0.0;   // max grid spacing
    double cfl = 0.0; // max CFL number observed over the run
    std::string scheme;
};

/// Time-marched solution of the master equation: one field per output time.
/// All solvers march forward from initial data U0 (terminal-data statements
/// are consumed after the time reversal t -> t_f - t).
struct Trajectory {
    std::vector<double> times;
    std::vector<ValueField> fields;
    SchemeMeta meta;

    const Grid& grid() const { return fields.front().grid; }

    /// linear-in-time interpolation between stored fields, clamped in space
    Vec eval(double t, const Vec& x) const;

    std::size_t nearest_time_index(double t) const;
};

/// Value pullback under a population jump: x -> S^T U(S x + e) with
/// multilinear interpolation (clamped) for the off-grid evaluation.
ValueField jump_pullback(const ValueField& U, const AffineJump& J);

struct MasterOptions {
    double blowup_cap = -1.0; // <0 means 1e6 * (1 + |U0|_inf)
    int max_outputs = 200;
};

/// One explicit upwind step of
///   dU/dt + (F(x,U) . grad)U + discount*U + [noise terms] = G(x,U).
/// CommonPoisson adds rate*(U - pullback); IidPoisson adds the drift
/// rate*(x - T(x)) and the zero-order rate*(Id - S^T)U; Mixture adds the
/// weighted relaxation sum. DeterministicJump contributes nothing inside a
/// step (solve_master applies the interface relation between segments).
/// Throws on CFL violation (reporting the offending drift) and on non-finite
/// values.
ValueField step_master(const ValueField& U, const Coupling& coupling, const NoiseSpec& noise,
                       double t, double dt, double discount);

/// Forward march on [0, t_f]. For DeterministicJump the step sequence splits
/// exactly at t1 and both U(t1-) and U(t1+) are recorded (t1 >= t_f behaves
/// as no noise). Output every ceil(t_f/dt/max_outputs)-th step plus segment
/// endpoints.
Trajectory solve_master(const ValueField& U0, const Coupling& coupling, const NoiseSpec& noise,
                        double t_f, double dt, double discount,
                        const MasterOptions& opts = {});

enum class AsymptoticOrder { First, Second };

struct AsymptoticOptions {
    /// The Second operator is implemented as displayed:
    ///   dU/dt + (F.grad)U - S^T(Sx.grad)U - 2(Sx.grad^2.Sx)U = G.
    /// The formal expansion of the jump terms instead yields coefficients
    ///   -2 S^T(Sx.grad)U - (Sx.grad^2.Sx)U; set this flag to use them.
    bool derivation_variant = false;
    double blowup_cap = -1.0;
    int max_outputs = 200;
};

/// Limit operators of the vanishing-jump-size regime. First order:
///   dU/dt + (F.grad)U - (Sx.grad)U - S^T U = G.
/// Second order: see AsymptoticOptions. S = 0 reproduces solve_master with
/// no noise exactly.
Trajectory solve_asymptotic(const ValueField& U0, const Coupling& coupling, const Mat& S,
                            AsymptoticOrder order, double t_f, double dt,
                            const AsymptoticOptions& opts = {});

} // namespace mfg
