#include "mfg/master_eq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

Vec Trajectory::eval(double t, const Vec& x) const {
    if (times.empty()) throw std::runtime_error("Trajectory::eval: empty trajectory");
    if (t <= times.front()) return interpolate(fields.front(), x);
    if (t >= times.back()) return interpolate(fields.back(), x);
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t j = static_cast<std::size_t>(it - times.begin());
    double t0 = times[j - 1], t1 = times[j];
    if (t1 <= t0) return interpolate(fields[j], x); // duplicated jump time
    double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * interpolate(fields[j - 1], x) + w * interpolate(fields[j], x);
}

std::size_t Trajectory::nearest_time_index(double t) const {
    std::size_t best = 0;
    double gap = std::abs(times[0] - t);
    for (std::size_t j = 1; j < times.size(); ++j) {
        double g = std::abs(times[j] - t);
        if (g < gap) {
            gap = g;
            best = j;
        }
    }
    return best;
}

ValueField jump_pullback(const ValueField& U, const AffineJump& J) {
    if (J.dim() != U.components())
        throw std::invalid_argument("jump_pullback: jump dimension does not match components");
    ValueField out;
    out.grid = U.grid;
    out.values = Mat(U.values.rows(), U.values.cols());
    Mat St = J.S.transpose();
    for (long i = 0; i < U.grid.node_count(); ++i) {
        Vec x = U.grid.node_coordinate(i);
        out.values.row(i) = (St * interpolate(U, J.apply(x))).transpose();
    }
    return out;
}

namespace {

// Step terms beyond the always-present F-transport and G source.
// solve_master and solve_asymptotic share this kernel so that
// equal-up-to-zero-terms configurations produce bit-identical trajectories.
struct StepSpec {
    double discount = 0.0;
    Mat drift_matrix;  // extra drift a += M x + b
    Vec drift_offset;
    Mat zero_order;             // contributes -dt * Z u
    double zero_order_norm = 0.0;
    std::vector<std::pair<double, AffineJump>> relax_jumps; // rate_k * (u - pullback_k)
    double relax_total_rate = 0.0;
    bool second_order = false;
    Mat S;                      // direction field Sx of the second limit operator
    double c_mixed = 1.0, c_diffusion = 2.0;

    static StepSpec plain(int d) {
        StepSpec s;
        s.drift_matrix = Mat::Zero(d, d);
        s.drift_offset = Vec::Zero(d);
        s.zero_order = Mat::Zero(d, d);
        return s;
    }
};

// centered (b . grad)U at a node, per component; missing neighbors use the
// clamped constant extension (the node value itself)
Vec centered_directional(const ValueField& U, long i, const Vec& b) {
    const Grid& g = U.grid;
    Vec out = Vec::Zero(U.components());
    for (int ax = 0; ax < g.dim(); ++ax) {
        if (b[ax] == 0.0) continue;
        long np = g.neighbor(i, ax, +1);
        long nm = g.neighbor(i, ax, -1);
        Vec up = (np >= 0 ? U.values.row(np) : U.values.row(i)).transpose();
        Vec um = (nm >= 0 ? U.values.row(nm) : U.values.row(i)).transpose();
        out += (b[ax] / (2.0 * g.spacing[ax])) * (up - um);
    }
    return out;
}

ValueField step_kernel(const ValueField& U, const Coupling& coupling, double dt,
                       const StepSpec& spec, double* cfl_out) {
    const Grid& g = U.grid;
    const int d = g.dim();
    const int comps = U.components();
    const double h_min = g.min_spacing();

    std::vector<std::pair<double, ValueField>> pulled;
    pulled.reserve(spec.relax_jumps.size());
    for (const auto& [rate, J] : spec.relax_jumps)
        pulled.emplace_back(rate, jump_pullback(U, J));

    ValueField out;
    out.grid = g;
    out.values = Mat(U.values.rows(), comps);

    double max_cfl = 0.0;
    double max_drift = 0.0;

    for (long i = 0; i < g.node_count(); ++i) {
        Vec x = g.node_coordinate(i);
        Vec u = U.values.row(i).transpose();
        Vec a = coupling.F(x, u) + spec.drift_matrix * x + spec.drift_offset;

        // upwind transport; all components ride the same scalar drift
        Vec transport = Vec::Zero(comps);
        double drift_sum = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            double ai = a[ax];
            drift_sum += std::abs(ai) / g.spacing[ax];
            if (ai == 0.0) continue;
            long nb = (ai > 0.0) ? g.neighbor(i, ax, -1) : g.neighbor(i, ax, +1);
            if (nb < 0) continue; // clamped box: constant extension, zero slope
            Vec diff = (ai > 0.0) ? (u - U.values.row(nb).transpose()).eval()
                                  : (U.values.row(nb).transpose() - u).eval();
            transport += (ai / g.spacing[ax]) * diff;
        }

        Vec rhs = coupling.G(x, u) - transport - spec.discount * u - spec.zero_order * u;
        for (const auto& [rate, field] : pulled)
            rhs -= rate * (u - field.values.row(i).transpose());

        double diffusion_budget = 0.0;
        if (spec.second_order) {
            Vec b = spec.S * x;
            rhs += spec.c_mixed * (spec.S.transpose() * centered_directional(U, i, b));
            double bn = b.norm();
            if (bn > 1e-14) {
                double delta = h_min / bn;
                Vec plus = interpolate(U, x + delta * b);
                Vec minus = interpolate(U, x - delta * b);
                rhs += (spec.c_diffusion / (delta * delta)) * (plus - 2.0 * u + minus);
                diffusion_budget = 2.0 * spec.c_diffusion * bn * bn / (h_min * h_min);
            }
        }

        double cfl = dt * (drift_sum + spec.discount + spec.relax_total_rate +
                           spec.zero_order_norm + diffusion_budget);
        max_cfl = std::max(max_cfl, cfl);
        max_drift = std::max(max_drift, drift_sum * h_min);

        out.values.row(i) = (u + dt * rhs).transpose();
    }

    if (max_cfl > 1.0 + 1e-9)
        throw std::invalid_argument(
            "step: CFL violation, dt*(drift/h + zero-order rates) = " + std::to_string(max_cfl) +
            " > 1, max total drift " + std::to_string(max_drift / h_min) + "; reduce dt");
    if (!out.all_finite()) throw std::runtime_error("step: non-finite values produced");
    if (cfl_out) *cfl_out = std::max(*cfl_out, max_cfl);
    return out;
}

StepSpec spec_for_noise(const NoiseSpec& noise, int d, double discount) {
    StepSpec spec = StepSpec::plain(d);
    spec.discount = discount;
    if (const auto* c = std::get_if<CommonPoisson>(&noise)) {
        spec.relax_jumps.emplace_back(c->rate, c->J);
        spec.relax_total_rate = c->rate;
    } else if (const auto* m = std::get_if<Mixture>(&noise)) {
        for (const auto& atom : m->atoms)
            spec.relax_jumps.emplace_back(m->rate * atom.weight, atom.J);
        spec.relax_total_rate = m->rate;
    } else if (const auto* iid = std::get_if<IidPoisson>(&noise)) {
        // drift rate*(x - T(x)) = rate*((I - S)x - e), zero order rate*(I - S^T)
        spec.drift_matrix = iid->rate * (Mat::Identity(d, d) - iid->J.S);
        spec.drift_offset = -iid->rate * iid->J.e;
        spec.zero_order = iid->rate * (Mat::Identity(d, d) - iid->J.S.transpose());
        spec.zero_order_norm = iid->rate > 0.0 ? spec.zero_order.operatorNorm() : 0.0;
    }
    return spec;
}

struct Recorder {
    Trajectory traj;
    long stride;
    long steps_done = 0;

    void record(double t, const ValueField& U) {
        traj.times.push_back(t);
        traj.fields.push_back(U);
    }
    void after_step(double t, const ValueField& U, bool segment_end) {
        ++steps_done;
        if (steps_done % stride == 0 || segment_end) record(t, U);
    }
};

Trajectory march(const ValueField& U0, const Coupling& coupling, const StepSpec& spec,
                 double t_f, double dt, double blowup_cap, int max_outputs,
                 const DeterministicJump* det, const std::string& scheme) {
    if (!(t_f > 0.0)) throw std::invalid_argument("solve: t_f must be positive");
    if (!(dt > 0.0) || dt > t_f + 1e-15)
        throw std::invalid_argument("solve: need 0 < dt <= t_f");
    if (!U0.all_finite()) throw std::invalid_argument("solve: U0 has non-finite values");
    if (U0.components() != U0.grid.dim())
        throw std::invalid_argument("solve: master unknown needs d components on a d-dim grid");

    double cap = blowup_cap > 0.0 ? blowup_cap : 1e6 * (1.0 + U0.max_abs());
    long nominal = static_cast<long>(std::ceil(t_f / dt - 1e-12));

    Recorder rec;
    rec.stride = std::max<long>(1, static_cast<long>(std::ceil(
                                       static_cast<double>(nominal) / max_outputs)));
    rec.traj.meta.dt = dt;
    rec.traj.meta.h = U0.grid.max_spacing();
    rec.traj.meta.scheme = scheme;
    rec.record(0.0, U0);

    std::vector<double> cuts{0.0};
    bool jump_fires = det != nullptr && det->t1 < t_f;
    if (jump_fires) cuts.push_back(det->t1);
    cuts.push_back(t_f);

    ValueField U = U0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        double a = cuts[s], b = cuts[s + 1];
        long n = std::max<long>(1, static_cast<long>(std::ceil((b - a) / dt - 1e-12)));
        double dts = (b - a) / n;
        for (long k = 0; k < n; ++k) {
            U = step_kernel(U, coupling, dts, spec, &rec.traj.meta.cfl);
            double tk = (k == n - 1) ? b : a + (k + 1) * dts;
            if (U.max_abs() > cap)
                throw std::runtime_error("solve: blow-up detected at t = " + std::to_string(tk) +
                                         " (|U| exceeded " + std::to_string(cap) + ")");
            rec.after_step(tk, U, k == n - 1);
        }
        if (jump_fires && s == 0) {
            U = jump_pullback(U, det->J); // interface relation at t1
            rec.record(b, U);
        }
    }
    return rec.traj;
}

} // namespace

ValueField step_master(const ValueField& U, const Coupling& coupling, const NoiseSpec& noise,
                       double t, double dt, double discount) {
    (void)t; // coupling and noise terms are autonomous
    if (discount < 0.0) throw std::invalid_argument("step_master: discount must be >= 0");
    validate_noise(noise);
    StepSpec spec = spec_for_noise(noise, U.grid.dim(), discount);
    return step_kernel(U, coupling, dt, spec, nullptr);
}

Trajectory solve_master(const ValueField& U0, const Coupling& coupling, const NoiseSpec& noise,
                        double t_f, double dt, double discount, const MasterOptions& opts) {
    if (discount < 0.0) throw std::invalid_argument("solve_master: discount must be >= 0");
    validate_noise(noise);
    StepSpec spec = spec_for_noise(noise, U0.grid.dim(), discount);
    const auto* det = std::get_if<DeterministicJump>(&noise);
    return march(U0, coupling, spec, t_f, dt, opts.blowup_cap, opts.max_outputs, det,
                 "upwind-explicit");
}

Trajectory solve_asymptotic(const ValueField& U0, const Coupling& coupling, const Mat& S,
                            AsymptoticOrder order, double t_f, double dt,
                            const AsymptoticOptions& opts) {
    const int d = U0.grid.dim();
    if (S.rows() != d || S.cols() != d)
        throw std::invalid_argument("solve_asymptotic: S must be d x d");

    StepSpec spec = StepSpec::plain(d);
    std::string scheme;
    if (order == AsymptoticOrder::First) {
        spec.drift_matrix = -S;
        spec.zero_order = -S.transpose();
        spec.zero_order_norm = S.isZero(0.0) ? 0.0 : S.operatorNorm();
        scheme = "asymptotic-first";
    } else {
        spec.second_order = true;
        spec.S = S;
        if (opts.derivation_variant) {
            spec.c_mixed = 2.0;
            spec.c_diffusion = 1.0;
        }
        // parabolic CFL of the displayed operator: dt <= h^2 / (4 max|Sx|^2)
        double max_bn = 0.0;
        const Grid& g = U0.grid;
        for (long i = 0; i < g.node_count(); ++i)
            max_bn = std::max(max_bn, (S * g.node_coordinate(i)).norm());
        double h = g.min_spacing();
        if (max_bn > 0.0 && dt > h * h / (4.0 * max_bn * max_bn) + 1e-15)
            throw std::invalid_argument(
                "solve_asymptotic: parabolic CFL requires dt <= h^2/(4 max|Sx|^2) = " +
                std::to_string(h * h / (4.0 * max_bn * max_bn)));
        scheme = opts.derivation_variant ? "asymptotic-second-derivation" : "asymptotic-second";
    }
    return march(U0, coupling, spec, t_f, dt, opts.blowup_cap, opts.max_outputs, nullptr,
                 scheme);
}

} // namespace mfg
