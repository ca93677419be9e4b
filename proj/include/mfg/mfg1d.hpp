#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mfg/field1d.hpp"

namespace mfg {

/// Separable Hamiltonian H(x,p,m) = H_tilde(p) - f(m): independent of x,
/// local coupling. Carries the derivative evaluators the solvers need.
struct SeparableHamiltonian {
    std::function<double(double)> H_tilde;
    std::function<double(double)> dH_tilde;
    std::function<double(double)> d2H_tilde;
    std::function<double(double)> f;
    std::function<double(double)> df;
};

/// H(t,x,p,m) = B(t,x,m) p + delta p^2 with bounded drift B.
struct QuadraticHamiltonian {
    std::function<double(double t, double x, double m)> B;
    double delta = 0.0;
};

struct HamiltonianSpec {
    std::variant<SeparableHamiltonian, QuadraticHamiltonian> form;

    bool separable() const { return std::holds_alternative<SeparableHamiltonian>(form); }

    double value(double t, double x, double p, double m) const;
    double dp(double t, double x, double p, double m) const;
    /// derivative in the m slot; defined for the separable form only
    double dz(double t, double x, double p, double m) const;
    double dpp(double t, double x, double p, double m) const;

    static HamiltonianSpec separable_quadratic(double p2_coeff,
                                               std::function<double(double)> f,
                                               std::function<double(double)> df);
    static HamiltonianSpec make_separable(SeparableHamiltonian h);
    static HamiltonianSpec quadratic(std::function<double(double, double, double)> B,
                                     double delta);
};

/// Exact spectral solution of the viscous HJB equation
///   -du/dt - nu*Lap(u) + |grad u|^2/2 = 0, u(T) = phi
/// on the torus via u = -2 nu log w with w solving the backward heat
/// equation. The only errors are the spatial sampling of phi and the
/// underflow floor on w, which makes this an independent oracle for the
/// finite-difference paths.
class ColeHopf {
public:
    ColeHopf(const ScalarField1D& phi, double nu, double horizon);

    ScalarField1D field_at(double t) const;
    double horizon() const { return T_; }
    bool floor_hit() const { return floor_hit_; }

private:
    int n_;
    double nu_, T_;
    mutable bool floor_hit_ = false;
    Eigen::VectorXcd what_; // DFT of w(T) = exp(-phi/(2 nu))
};

/// Tabulation of the Cole-Hopf solution at spacing dt (all step times).
ScalarTrajectory1D cole_hopf_hjb(const ScalarField1D& phi, double nu, double horizon,
                                 double dt);

enum class FluxScheme { Upwind, Centered };

/// node drift b(t, x_i, m) of the Fokker-Planck equation
///   dm/dt - nu*Lap(m) - div(b m) = 0
using DriftFn = std::function<double(double t, int i, const ScalarField1D& m)>;

/// Mass-conserving explicit advection-diffusion on the torus. Upwind fluxes
/// are positivity-preserving under the CFL condition; centered fluxes are
/// second order in space and positivity-preserving under the cell Peclet
/// condition |b| h <= 2 nu (both are checked every step).
ScalarTrajectory1D solve_fp(const DriftFn& B, double nu, const ScalarField1D& m0,
                            double horizon, double dt, FluxScheme flux = FluxScheme::Upwind,
                            int max_outputs = 401);

using TerminalCondition = std::variant<ScalarField1D, std::function<double(double)>>;

struct PicardOptions {
    int max_iter = 200;
    double damping = 0.5; // theta in (0, 1]
    double tol = 1e-7;
};

enum class InitialGuess { InitialDensity, Uniform };

struct MfgSolution1D {
    std::vector<double> times;
    std::vector<ScalarField1D> u;
    std::vector<ScalarField1D> m;
    int picard_iterations = 0;
    std::vector<double> residuals;
    bool converged = false;
    double nu = 0.0, lambda = 0.0, dt = 0.0;
};

/// Damped Picard iteration for the discounted forward-backward system
///   -du/dt - nu*Lap(u) + H(t,x,grad u,m) + lambda*(u - psi(m)) = 0, u(T) given
///    dm/dt - nu*Lap(m) - div(D_pH(t,x,grad u,m) m) = 0,          m(0) = m0.
/// psi absent means the plain discount term lambda*u. Non-convergence
/// returns the partial result with converged = false.
MfgSolution1D solve_mfg_discounted(const HamiltonianSpec& H, double lambda_disc,
                                   const std::optional<std::function<double(double)>>& psi,
                                   double nu, double horizon, const ScalarField1D& m0,
                                   const TerminalCondition& terminal, double dt,
                                   const PicardOptions& picard = {},
                                   InitialGuess guess = InitialGuess::InitialDensity,
                                   FluxScheme flux = FluxScheme::Centered,
                                   int max_outputs = 401);

/// Fokker-Planck with the first-order-in-1/lambda drift correction
///   b = D_pH(x, grad(-H(x,0,m)/lambda), m).
/// Requires the separable form; the effective diffusion
///   nu - (1/lambda) m D_zH D_ppH
/// is checked to stay nonnegative and the run is rejected otherwise.
ScalarTrajectory1D solve_fp_higher_order(const HamiltonianSpec& H, double lambda_disc,
                                         double nu, const ScalarField1D& m0, double horizon,
                                         double dt, FluxScheme flux = FluxScheme::Centered,
                                         int max_outputs = 401);

double effective_diffusion(const HamiltonianSpec& H, double lambda_disc, double nu, double x,
                           double q, double m);

struct MomentumSeries {
    std::vector<double> times;
    std::vector<double> A; // h * sum grad(u) m per time
    double max_drift = 0.0;
};

/// Time series of the average control A(t) = integral of grad(u(t)) m(t);
/// constant in time for x-independent separable Hamiltonians.
MomentumSeries conserved_momentum(const MfgSolution1D& sol);

/// Uniqueness threshold of the mean-control fixed point: (1 + c T) / (c T).
double uniqueness_threshold(double c, double horizon);

struct SemiconcavityResult {
    bool holds = false;
    double max_violation = 0.0; // max over (t, x) of D^2 u - bound
    double arg_time = 0.0;
    int arg_node = 0;
    double tol = 0.0;
};

/// Checks D^2 u0(t) <= c / (1 + c (T - t)) + tol with second difference
/// quotients; tol = 10 (h^2 + dt).
SemiconcavityResult semiconcavity_check(const ScalarTrajectory1D& u0, double c);

struct RootScanOptions {
    double A_min = -5.0;
    double A_max = 5.0;
    int n_scan = 2001;
};

struct StrongCouplingResult {
    std::vector<double> A_roots;
    std::vector<double> scan_A;   // tabulated Phi for inspection
    std::vector<double> scan_phi;
    std::vector<MfgSolution1D> solutions;
    std::optional<double> threshold;
    double lip_phi = 0.0;
};

/// Mean-control fixed point of the strongly coupled example: computes u0 by
/// Cole-Hopf, tabulates Phi(A) = integral of grad(u0)(x + lambda A T, 0) m0,
/// refines every sign change of A - Phi(A) by bisection to 1e-10, and
/// reconstructs (u, m) for each root via the shift formula
///   u(t,x) = u0(t, x + lambda A (T-t))
/// and the transported Fokker-Planck flow.
StrongCouplingResult solve_strong_coupling(const ScalarField1D& phi, const ScalarField1D& m0,
                                           double lambda_ctrl, double nu, double horizon,
                                           double dt, const RootScanOptions& scan = {},
                                           std::optional<double> semiconcavity_c = {});

struct LambdaSweepRow {
    double lambda = 0.0;
    bool is_infinite = false;
    double sup_u_l2 = 0.0; // sup_t of the discrete L2 norm of u(t)
    double w1_max = 0.0;   // max_t W1(m_lambda(t), m_inf(t))
    bool converged = false;
    int picard_iterations = 0;
};

struct LambdaSweepTable {
    std::vector<LambdaSweepRow> rows;
    ScalarTrajectory1D m_limit;
};

/// Vanishing-anticipation sweep: solves the discounted MFG for each lambda
/// and compares the density flow against the forward model with drift
/// D_pH(t,x,0,m). A sentinel lambda = infinity row is computed directly from
/// the forward model.
LambdaSweepTable lambda_sweep(const std::vector<double>& lambdas, const HamiltonianSpec& H,
                              double nu, const ScalarField1D& m0, double horizon,
                              const TerminalCondition& terminal, double dt,
                              const PicardOptions& picard = {}, int threads = 1);

} // namespace mfg
