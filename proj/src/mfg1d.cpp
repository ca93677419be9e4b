#include "mfg/mfg1d.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mfg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kWFloor = 1e-300;
} // namespace

// ---------------------------------------------------------------- Hamiltonian

double HamiltonianSpec::value(double t, double x, double p, double m) const {
    if (const auto* s = std::get_if<SeparableHamiltonian>(&form))
        return s->H_tilde(p) - s->f(m);
    const auto& q = std::get<QuadraticHamiltonian>(form);
    return q.B(t, x, m) * p + q.delta * p * p;
}

double HamiltonianSpec::dp(double t, double x, double p, double m) const {
    if (const auto* s = std::get_if<SeparableHamiltonian>(&form)) return s->dH_tilde(p);
    const auto& q = std::get<QuadraticHamiltonian>(form);
    return q.B(t, x, m) + 2.0 * q.delta * p;
}

double HamiltonianSpec::dz(double, double, double, double m) const {
    if (const auto* s = std::get_if<SeparableHamiltonian>(&form)) return -s->df(m);
    throw std::invalid_argument("HamiltonianSpec::dz: defined for the separable form only");
}

double HamiltonianSpec::dpp(double, double, double p, double) const {
    if (const auto* s = std::get_if<SeparableHamiltonian>(&form)) return s->d2H_tilde(p);
    return 2.0 * std::get<QuadraticHamiltonian>(form).delta;
}

HamiltonianSpec HamiltonianSpec::separable_quadratic(double p2_coeff,
                                                     std::function<double(double)> f,
                                                     std::function<double(double)> df) {
    SeparableHamiltonian s;
    s.H_tilde = [p2_coeff](double p) { return p2_coeff * p * p; };
    s.dH_tilde = [p2_coeff](double p) { return 2.0 * p2_coeff * p; };
    s.d2H_tilde = [p2_coeff](double) { return 2.0 * p2_coeff; };
    s.f = std::move(f);
    s.df = std::move(df);
    return HamiltonianSpec{SeparableHamiltonian{std::move(s)}};
}

HamiltonianSpec HamiltonianSpec::make_separable(SeparableHamiltonian h) {
    return HamiltonianSpec{std::move(h)};
}

HamiltonianSpec HamiltonianSpec::quadratic(std::function<double(double, double, double)> B,
                                           double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("HamiltonianSpec::quadratic: delta must be > 0");
    return HamiltonianSpec{QuadraticHamiltonian{std::move(B), delta}};
}

// ------------------------------------------------------------------ Cole-Hopf

ColeHopf::ColeHopf(const ScalarField1D& phi, double nu, double horizon)
    : n_(phi.n), nu_(nu), T_(horizon) {
    if (!(nu > 0.0)) throw std::invalid_argument("ColeHopf: nu must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("ColeHopf: horizon must be > 0");
    if (!phi.values.allFinite()) throw std::invalid_argument("ColeHopf: phi must be finite");

    Eigen::VectorXd w(n_);
    for (int j = 0; j < n_; ++j) w[j] = std::exp(-phi.values[j] / (2.0 * nu));

    what_ = Eigen::VectorXcd(n_);
    for (int k = 0; k < n_; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < n_; ++j) {
            double angle = -kTwoPi * static_cast<double>(j) * k / n_;
            acc += w[j] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        what_[k] = acc;
    }
}

ScalarField1D ColeHopf::field_at(double t) const {
    double tau = T_ - std::min(std::max(t, 0.0), T_);
    ScalarField1D u;
    u.n = n_;
    u.values = Eigen::VectorXd(n_);
    for (int j = 0; j < n_; ++j) {
        std::complex<double> acc(0.0, 0.0);
        for (int k = 0; k < n_; ++k) {
            int ks = (k <= n_ / 2) ? k : k - n_; // signed frequency
            double decay = std::exp(-kTwoPi * kTwoPi * ks * ks * nu_ * tau);
            double angle = kTwoPi * static_cast<double>(j) * k / n_;
            acc += what_[k] * decay * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        double w = acc.real() / n_;
        if (w < kWFloor) {
            w = kWFloor;
            floor_hit_ = true;
        }
        u.values[j] = -2.0 * nu_ * std::log(w);
    }
    return u;
}

ScalarTrajectory1D cole_hopf_hjb(const ScalarField1D& phi, double nu, double horizon,
                                 double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("cole_hopf_hjb: dt must be > 0");
    ColeHopf ch(phi, nu, horizon);
    long n = std::max<long>(1, static_cast<long>(std::ceil(horizon / dt - 1e-12)));
    double dts = horizon / n;
    ScalarTrajectory1D out;
    for (long j = 0; j <= n; ++j) {
        double t = (j == n) ? horizon : j * dts;
        out.times.push_back(t);
        out.fields.push_back(ch.field_at(t));
    }
    return out;
}

// --------------------------------------------------------------- FP marching

namespace {

struct FpStepper {
    double nu, h;
    int n;
    FluxScheme flux;

    // one explicit conservative step; throws on CFL/Peclet violation
    Eigen::VectorXd step(const Eigen::VectorXd& m, const Eigen::VectorXd& b, double dt,
                         double t) const {
        const double invh = 1.0 / h;
        double maxb = b.cwiseAbs().maxCoeff();
        if (flux == FluxScheme::Centered && maxb * h > 2.0 * nu + 1e-12)
            throw std::invalid_argument(
                "solve_fp: Peclet condition |b| h <= 2 nu violated (|b| = " +
                std::to_string(maxb) + ") at t = " + std::to_string(t));
        if (dt * (maxb * invh + 2.0 * nu * invh * invh) > 1.0 + 1e-9)
            throw std::invalid_argument("solve_fp: CFL violation at t = " + std::to_string(t) +
                                        "; reduce dt");

        Eigen::VectorXd out(n);
        auto wrap = [this](int i) { return (i % n + n) % n; };
        for (int i = 0; i < n; ++i) {
            int ip = wrap(i + 1), im = wrap(i - 1);
            double bp = 0.5 * (b[i] + b[ip]); // face i+1/2
            double bm = 0.5 * (b[im] + b[i]); // face i-1/2
            double flux_p, flux_m;
            if (flux == FluxScheme::Upwind) {
                // (b m) at the face with m taken from the side the mass
                // arrives from: density moves with velocity -b
                flux_p = bp > 0.0 ? bp * m[ip] : bp * m[i];
                flux_m = bm > 0.0 ? bm * m[i] : bm * m[im];
            } else {
                flux_p = 0.5 * (b[i] * m[i] + b[ip] * m[ip]);
                flux_m = 0.5 * (b[im] * m[im] + b[i] * m[i]);
            }
            double advect = (flux_p - flux_m) * invh;
            double diffuse = nu * (m[ip] - 2.0 * m[i] + m[im]) * invh * invh;
            out[i] = m[i] + dt * (diffuse + advect);
        }
        return out;
    }
};

long output_stride(long n_steps, int max_outputs) {
    return std::max<long>(1, static_cast<long>(std::ceil(
                                  static_cast<double>(n_steps) / std::max(1, max_outputs - 1))));
}

} // namespace

ScalarTrajectory1D solve_fp(const DriftFn& B, double nu, const ScalarField1D& m0,
                            double horizon, double dt, FluxScheme flux, int max_outputs) {
    if (!(horizon > 0.0)) throw std::invalid_argument("solve_fp: horizon must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("solve_fp: dt must be > 0");
    if (!m0.is_density(1e-8)) throw std::invalid_argument("solve_fp: m0 must be a density");

    long n_steps = std::max<long>(1, static_cast<long>(std::ceil(horizon / dt - 1e-12)));
    double dts = horizon / n_steps;
    long stride = output_stride(n_steps, max_outputs);

    FpStepper stepper{nu, m0.h(), m0.n, flux};
    ScalarField1D m = m0;
    Eigen::VectorXd b(m0.n);

    ScalarTrajectory1D out;
    out.times.push_back(0.0);
    out.fields.push_back(m);
    for (long k = 0; k < n_steps; ++k) {
        double t = k * dts;
        for (int i = 0; i < m0.n; ++i) b[i] = B(t, i, m);
        m.values = stepper.step(m.values, b, dts, t);
        double tk = (k == n_steps - 1) ? horizon : t + dts;
        if (m.values.minCoeff() < -1e-9)
            throw std::runtime_error("solve_fp: negative density at t = " + std::to_string(tk) +
                                     " (CFL/Peclet violation)");
        if ((k + 1) % stride == 0 || k == n_steps - 1) {
            out.times.push_back(tk);
            out.fields.push_back(m);
        }
    }
    return out;
}

// ---------------------------------------------------------------- MFG Picard

MfgSolution1D solve_mfg_discounted(const HamiltonianSpec& H, double lambda_disc,
                                   const std::optional<std::function<double(double)>>& psi,
                                   double nu, double horizon, const ScalarField1D& m0,
                                   const TerminalCondition& terminal, double dt,
                                   const PicardOptions& picard, InitialGuess guess,
                                   FluxScheme flux, int max_outputs) {
    if (!(horizon > 0.0)) throw std::invalid_argument("solve_mfg: horizon must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("solve_mfg: dt must be > 0");
    if (lambda_disc < 0.0) throw std::invalid_argument("solve_mfg: lambda must be >= 0");
    if (!(picard.damping > 0.0) || picard.damping > 1.0)
        throw std::invalid_argument("solve_mfg: damping must be in (0,1]");
    if (picard.max_iter < 1)
        throw std::invalid_argument("solve_mfg: max_iter must be >= 1");
    if (!m0.is_density(1e-8)) throw std::invalid_argument("solve_mfg: m0 must be a density");

    const int n = m0.n;
    const double h = m0.h();
    long n_steps = std::max<long>(1, static_cast<long>(std::ceil(horizon / dt - 1e-12)));
    double dts = horizon / n_steps;
    if (dts * (2.0 * nu / (h * h) + lambda_disc) > 1.0 + 1e-9)
        throw std::invalid_argument(
            "solve_mfg: explicit HJB step unstable, need dt*(2 nu/h^2 + lambda) <= 1");

    auto times_at = [&](long j) { return (j == n_steps) ? horizon : j * dts; };

    std::vector<Eigen::VectorXd> m_traj(n_steps + 1);
    switch (guess) {
    case InitialGuess::InitialDensity:
        for (auto& mj : m_traj) mj = m0.values;
        break;
    case InitialGuess::Uniform:
        for (auto& mj : m_traj) mj = Eigen::VectorXd::Ones(n);
        m_traj[0] = m0.values;
        break;
    }

    std::vector<Eigen::VectorXd> u_traj(n_steps + 1, Eigen::VectorXd::Zero(n));
    FpStepper stepper{nu, h, n, flux};

    auto wrap = [n](int i) { return (i % n + n) % n; };
    auto grad_of = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd g(n);
        for (int i = 0; i < n; ++i) g[i] = (v[wrap(i + 1)] - v[wrap(i - 1)]) * 0.5 * n;
        return g;
    };
    auto lap_of = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd l(n);
        for (int i = 0; i < n; ++i)
            l[i] = (v[wrap(i + 1)] - 2.0 * v[i] + v[wrap(i - 1)]) * static_cast<double>(n) * n;
        return l;
    };

    MfgSolution1D sol;
    sol.nu = nu;
    sol.lambda = lambda_disc;
    sol.dt = dts;
    bool converged = false;
    int iterations = 0;

    std::vector<Eigen::VectorXd> u_prev, m_prev;
    for (int it = 0; it < picard.max_iter; ++it) {
        // backward HJB sweep given m
        Eigen::VectorXd uT(n);
        if (const auto* fixed = std::get_if<ScalarField1D>(&terminal)) {
            if (fixed->n != n)
                throw std::invalid_argument("solve_mfg: terminal field grid mismatch");
            uT = fixed->values;
        } else {
            const auto& g = std::get<std::function<double(double)>>(terminal);
            for (int i = 0; i < n; ++i) uT[i] = g(m_traj[n_steps][i]);
        }
        u_traj[n_steps] = uT;
        for (long j = n_steps - 1; j >= 0; --j) {
            const Eigen::VectorXd& up = u_traj[j + 1];
            const Eigen::VectorXd& mp = m_traj[j + 1];
            Eigen::VectorXd gu = grad_of(up);
            Eigen::VectorXd lu = lap_of(up);
            double t = times_at(j + 1);
            Eigen::VectorXd& uj = u_traj[j];
            uj.resize(n);
            for (int i = 0; i < n; ++i) {
                double zero_order = psi ? lambda_disc * (up[i] - (*psi)(mp[i]))
                                        : lambda_disc * up[i];
                double xi = static_cast<double>(i) * h;
                uj[i] = up[i] + dts * (nu * lu[i] - H.value(t, xi, gu[i], mp[i]) - zero_order);
            }
            if (!uj.allFinite())
                throw std::runtime_error("solve_mfg: non-finite value function at t = " +
                                         std::to_string(times_at(j)));
        }

        // forward FP sweep given u
        std::vector<Eigen::VectorXd> m_new(n_steps + 1);
        m_new[0] = m0.values;
        Eigen::VectorXd b(n);
        for (long j = 0; j < n_steps; ++j) {
            Eigen::VectorXd gu = grad_of(u_traj[j]);
            double t = times_at(j);
            for (int i = 0; i < n; ++i)
                b[i] = H.dp(t, static_cast<double>(i) * h, gu[i], m_new[j][i]);
            m_new[j + 1] = stepper.step(m_new[j], b, dts, t);
            if (m_new[j + 1].minCoeff() < -1e-9)
                throw std::runtime_error("solve_mfg: negative density at t = " +
                                         std::to_string(times_at(j + 1)) +
                                         " (CFL/Peclet violation in the FP sweep)");
        }

        // sup-norm gap against the previous iterate
        double residual = std::numeric_limits<double>::infinity();
        if (it > 0) {
            residual = 0.0;
            for (long j = 0; j <= n_steps; ++j) {
                residual = std::max(residual,
                                    (u_traj[j] - u_prev[j]).cwiseAbs().maxCoeff());
                residual = std::max(residual,
                                    (m_new[j] - m_prev[j]).cwiseAbs().maxCoeff());
            }
            sol.residuals.push_back(residual);
        }
        u_prev = u_traj;
        m_prev = m_new;
        iterations = it + 1;

        // damped density update
        const double theta = picard.damping;
        for (long j = 0; j <= n_steps; ++j)
            m_traj[j] = theta * m_new[j] + (1.0 - theta) * m_traj[j];

        if (residual <= picard.tol) {
            converged = true;
            break;
        }
    }

    sol.picard_iterations = iterations;
    sol.converged = converged;

    // report the last undamped sweep: (u, m) is then a consistent
    // backward-forward pair up to the fixed-point residual
    long stride = output_stride(n_steps, max_outputs);
    for (long j = 0; j <= n_steps; ++j) {
        if (j % stride != 0 && j != n_steps) continue;
        sol.times.push_back(times_at(j));
        ScalarField1D uf, mf;
        uf.n = n;
        uf.values = u_traj[j];
        mf.n = n;
        mf.values = m_prev[j];
        sol.u.push_back(std::move(uf));
        sol.m.push_back(std::move(mf));
    }
    return sol;
}

// --------------------------------------------------- higher-order correction

double effective_diffusion(const HamiltonianSpec& H, double lambda_disc, double nu, double x,
                           double q, double m) {
    return nu - (1.0 / lambda_disc) * m * H.dz(0.0, x, q, m) * H.dpp(0.0, x, q, m);
}

ScalarTrajectory1D solve_fp_higher_order(const HamiltonianSpec& H, double lambda_disc,
                                         double nu, const ScalarField1D& m0, double horizon,
                                         double dt, FluxScheme flux, int max_outputs) {
    if (!H.separable())
        throw std::invalid_argument("solve_fp_higher_order: separable Hamiltonian required");
    if (!(lambda_disc > 0.0))
        throw std::invalid_argument("solve_fp_higher_order: lambda must be > 0");
    const auto& sep = std::get<SeparableHamiltonian>(H.form);
    const int n = m0.n;
    const double h = m0.h();
    const double h0 = sep.H_tilde(0.0);

    struct Cache {
        double t = std::numeric_limits<double>::quiet_NaN();
        Eigen::VectorXd q;
    };
    auto cache = std::make_shared<Cache>();

    DriftFn drift = [&, cache](double t, int i, const ScalarField1D& m) -> double {
        if (!(t == cache->t) || cache->q.size() != n) {
            // q = grad((f(m) - H_tilde(0)) / lambda), the expansion of grad u
            Eigen::VectorXd umfield(n);
            for (int j = 0; j < n; ++j)
                umfield[j] = (sep.f(m.values[j]) - h0) / lambda_disc;
            Eigen::VectorXd q(n);
            for (int j = 0; j < n; ++j) {
                int jp = (j + 1) % n, jm = (j + n - 1) % n;
                q[j] = (umfield[jp] - umfield[jm]) * 0.5 * n;
            }
            cache->q = q;
            cache->t = t;
            for (int j = 0; j < n; ++j) {
                double eff = effective_diffusion(H, lambda_disc, nu,
                                                 static_cast<double>(j) * h, q[j],
                                                 m.values[j]);
                if (eff < -1e-12)
                    throw std::runtime_error(
                        "solve_fp_higher_order: effective diffusion negative at x = " +
                        std::to_string(static_cast<double>(j) * h) +
                        ", m = " + std::to_string(m.values[j]));
            }
        }
        return H.dp(t, static_cast<double>(i) * h, cache->q[i], m.values[i]);
    };

    return solve_fp(drift, nu, m0, horizon, dt, flux, max_outputs);
}

// ----------------------------------------------------------------- momentum

MomentumSeries conserved_momentum(const MfgSolution1D& sol) {
    MomentumSeries series;
    series.times = sol.times;
    for (std::size_t j = 0; j < sol.times.size(); ++j) {
        Eigen::VectorXd gu = sol.u[j].gradient();
        double A = gu.dot(sol.m[j].values) * sol.u[j].h();
        series.A.push_back(A);
    }
    for (double a : series.A)
        series.max_drift = std::max(series.max_drift, std::abs(a - series.A.front()));
    return series;
}

double uniqueness_threshold(double c, double horizon) {
    if (!(c > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("uniqueness_threshold: need c > 0 and horizon > 0");
    return (1.0 + c * horizon) / (c * horizon);
}

SemiconcavityResult semiconcavity_check(const ScalarTrajectory1D& u0, double c) {
    if (u0.fields.empty()) throw std::invalid_argument("semiconcavity_check: empty trajectory");
    const double T = u0.times.back();
    const int n = u0.fields.front().n;
    const double h = 1.0 / n;
    double dt = 0.0;
    for (std::size_t j = 1; j < u0.times.size(); ++j)
        dt = std::max(dt, u0.times[j] - u0.times[j - 1]);

    SemiconcavityResult res;
    res.tol = 10.0 * (h * h + dt);
    res.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < u0.times.size(); ++j) {
        double bound = c / (1.0 + c * (T - u0.times[j]));
        Eigen::VectorXd d2 = u0.fields[j].laplacian();
        for (int i = 0; i < n; ++i) {
            double violation = d2[i] - bound;
            if (violation > res.max_violation) {
                res.max_violation = violation;
                res.arg_time = u0.times[j];
                res.arg_node = i;
            }
        }
    }
    res.holds = res.max_violation <= res.tol;
    return res;
}

// ---------------------------------------------------------- strong coupling

StrongCouplingResult solve_strong_coupling(const ScalarField1D& phi, const ScalarField1D& m0,
                                           double lambda_ctrl, double nu, double horizon,
                                           double dt, const RootScanOptions& scan,
                                           std::optional<double> semiconcavity_c) {
    if (phi.n != m0.n) throw std::invalid_argument("solve_strong_coupling: grid mismatch");
    if (!m0.is_density(1e-8))
        throw std::invalid_argument("solve_strong_coupling: m0 must be a density");
    if (scan.n_scan < 2) throw std::invalid_argument("solve_strong_coupling: n_scan >= 2");

    const int n = phi.n;
    const double h = phi.h();
    const double T = horizon;

    StrongCouplingResult result;
    for (int i = 0; i < n; ++i)
        result.lip_phi = std::max(result.lip_phi, std::abs(phi[i + 1] - phi[i]) / h);

    ColeHopf ch(phi, nu, T);

    // Phi(A) = integral of grad(u0)(x + lambda A T, 0) dm0
    ScalarField1D grad0;
    grad0.n = n;
    grad0.values = ch.field_at(0.0).gradient();
    auto Phi = [&](double A) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += grad0.interp(static_cast<double>(i) * h + lambda_ctrl * A * T) *
                   m0.values[i];
        return acc * h;
    };

    auto psi_fn = [&](double A) { return A - Phi(A); };

    result.scan_A.reserve(scan.n_scan);
    result.scan_phi.reserve(scan.n_scan);
    double step = (scan.A_max - scan.A_min) / (scan.n_scan - 1);
    for (int k = 0; k < scan.n_scan; ++k) {
        double A = scan.A_min + k * step;
        result.scan_A.push_back(A);
        result.scan_phi.push_back(Phi(A));
    }

    for (int k = 0; k + 1 < scan.n_scan; ++k) {
        double a = result.scan_A[k], b = result.scan_A[k + 1];
        double fa = a - result.scan_phi[k], fb = b - result.scan_phi[k + 1];
        if (fa == 0.0) {
            result.A_roots.push_back(a);
            continue;
        }
        if (fa * fb >= 0.0) continue;
        for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
            double mid = 0.5 * (a + b);
            double fm = psi_fn(mid);
            if (fm == 0.0) {
                a = b = mid;
                break;
            }
            if (fa * fm < 0.0) {
                b = mid;
                fb = fm;
            } else {
                a = mid;
                fa = fm;
            }
        }
        result.A_roots.push_back(0.5 * (a + b));
    }
    double f_last = result.scan_A.back() - result.scan_phi.back();
    if (f_last == 0.0) result.A_roots.push_back(result.scan_A.back());

    // reconstruct (u, m) for each root via the shift formula
    for (double A : result.A_roots) {
        struct Cache {
            double t = std::numeric_limits<double>::quiet_NaN();
            ScalarField1D grad_u;
        };
        auto cache = std::make_shared<Cache>();
        DriftFn drift = [&, cache, A](double t, int i, const ScalarField1D&) -> double {
            if (!(t == cache->t)) {
                ScalarField1D gu;
                gu.n = n;
                gu.values = ch.field_at(t).gradient();
                // grad u(t,x) = grad u0(t, x + lambda A (T - t))
                ScalarField1D shifted;
                shifted.n = n;
                shifted.values = Eigen::VectorXd(n);
                double shift = lambda_ctrl * A * (T - t);
                for (int j = 0; j < n; ++j)
                    shifted.values[j] = gu.interp(static_cast<double>(j) * h + shift);
                cache->grad_u = shifted;
                cache->t = t;
            }
            return lambda_ctrl * A - cache->grad_u.values[i];
        };
        ScalarTrajectory1D m_traj = solve_fp(drift, nu, m0, T, dt, FluxScheme::Centered, 401);

        MfgSolution1D sol;
        sol.nu = nu;
        sol.lambda = lambda_ctrl;
        sol.dt = dt;
        sol.converged = true;
        sol.times = m_traj.times;
        sol.m = m_traj.fields;
        for (double t : m_traj.times) {
            ScalarField1D u0t = ch.field_at(t);
            ScalarField1D ut;
            ut.n = n;
            ut.values = Eigen::VectorXd(n);
            double shift = lambda_ctrl * A * (T - t);
            for (int j = 0; j < n; ++j)
                ut.values[j] = u0t.interp(static_cast<double>(j) * h + shift);
            sol.u.push_back(std::move(ut));
        }
        result.solutions.push_back(std::move(sol));
    }

    if (semiconcavity_c)
        result.threshold = uniqueness_threshold(*semiconcavity_c, T);
    return result;
}

// -------------------------------------------------------------- lambda sweep

LambdaSweepTable lambda_sweep(const std::vector<double>& lambdas, const HamiltonianSpec& H,
                              double nu, const ScalarField1D& m0, double horizon,
                              const TerminalCondition& terminal, double dt,
                              const PicardOptions& picard, int threads) {
    DriftFn limit_drift = [&H, &m0](double t, int i, const ScalarField1D& m) -> double {
        return H.dp(t, static_cast<double>(i) * m0.h(), 0.0, m.values[i]);
    };
    ScalarTrajectory1D m_inf =
        solve_fp(limit_drift, nu, m0, horizon, dt, FluxScheme::Centered, 401);

    LambdaSweepTable table;
    table.m_limit = m_inf;
    table.rows.resize(lambdas.size() + 1);

    auto run_row = [&](std::size_t r) {
        LambdaSweepRow row;
        row.lambda = lambdas[r];
        MfgSolution1D sol =
            solve_mfg_discounted(H, lambdas[r], std::nullopt, nu, horizon, m0, terminal, dt,
                                 picard, InitialGuess::InitialDensity, FluxScheme::Centered,
                                 401);
        row.converged = sol.converged;
        row.picard_iterations = sol.picard_iterations;
        for (std::size_t j = 0; j < sol.times.size(); ++j) {
            double l2 = std::sqrt(sol.u[j].values.squaredNorm() * sol.u[j].h());
            row.sup_u_l2 = std::max(row.sup_u_l2, l2);
        }
        if (sol.times.size() != m_inf.times.size())
            throw std::runtime_error("lambda_sweep: output time grids diverged");
        for (std::size_t j = 0; j < sol.times.size(); ++j)
            row.w1_max = std::max(row.w1_max, wasserstein1_periodic(sol.m[j], m_inf.fields[j]));
        table.rows[r] = row;
    };

    threads = std::max(1, threads);
    if (threads == 1 || lambdas.size() <= 1) {
        for (std::size_t r = 0; r < lambdas.size(); ++r) run_row(r);
    } else {
        std::vector<std::thread> pool;
        std::mutex error_mutex;
        std::exception_ptr error;
        std::size_t per = (lambdas.size() + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            std::size_t begin = w * per, end = std::min(lambdas.size(), begin + per);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t r = begin; r < end; ++r) run_row(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    // sentinel row: the limit model compared with itself
    LambdaSweepRow inf_row;
    inf_row.is_infinite = true;
    inf_row.lambda = std::numeric_limits<double>::infinity();
    inf_row.converged = true;
    for (std::size_t j = 0; j < m_inf.times.size(); ++j)
        inf_row.w1_max =
            std::max(inf_row.w1_max, wasserstein1_periodic(m_inf.fields[j], m_inf.fields[j]));
    table.rows.back() = inf_row;
    return table;
}

} // namespace mfg
