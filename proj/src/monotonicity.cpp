#include "mfg/monotonicity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfg/rng.hpp"

namespace mfg {

ModulusEstimate monotonicity_modulus(const std::function<Vec(const Vec&)>& map_eval,
                                     const std::vector<std::pair<Vec, Vec>>& pairs) {
    ModulusEstimate est;
    est.modulus = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : pairs) {
        double d2 = (x - y).squaredNorm();
        if (d2 < 1e-28) {
            ++est.pairs_skipped;
            continue;
        }
        double pairing = (map_eval(x) - map_eval(y)).dot(x - y) / d2;
        est.modulus = std::min(est.modulus, pairing);
        ++est.pairs_used;
    }
    if (est.pairs_used == 0) est.modulus = 0.0;
    return est;
}

namespace {

template <typename Fn>
void for_each_pair(const Grid& g, const PairStrategy& strategy, Fn&& fn) {
    const long n = g.node_count();
    if (std::holds_alternative<AllNodePairs>(strategy)) {
        for (long i = 0; i < n; ++i)
            for (long j = i + 1; j < n; ++j) fn(i, j);
    } else {
        const auto& rp = std::get<RandomPairs>(strategy);
        Rng rng(rp.seed);
        long produced = 0;
        while (produced < rp.count) {
            long i = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(n));
            long j = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(n));
            if (i == j) continue;
            fn(i, j);
            ++produced;
        }
    }
}

} // namespace

MonotonicityReport verify_propagation(const Trajectory& traj, const PairStrategy& strategy,
                                      double tol) {
    if (traj.fields.empty()) throw std::invalid_argument("verify_propagation: empty trajectory");
    const Grid& g = traj.grid();
    const long n = g.node_count();

    // node coordinates cached once; pairings reuse them across all times
    std::vector<Vec> coords(n);
    for (long i = 0; i < n; ++i) coords[i] = g.node_coordinate(i);

    MonotonicityReport report;
    report.tol = tol;
    report.holds = true;

    for (std::size_t ti = 0; ti < traj.times.size(); ++ti) {
        const Mat& U = traj.fields[ti].values;
        double best = std::numeric_limits<double>::infinity();
        long bi = 0, bj = 0;
        long count = 0;
        for_each_pair(g, strategy, [&](long i, long j) {
            Vec dx = coords[i] - coords[j];
            double pairing = (U.row(i) - U.row(j)).dot(dx) / dx.squaredNorm();
            if (pairing < best) {
                best = pairing;
                bi = i;
                bj = j;
            }
            ++count;
        });
        report.times.push_back(traj.times[ti]);
        report.min_pairing.push_back(best);
        report.argmin_pair.emplace_back(bi, bj);
        report.pair_count = count;
        if (best < -tol) report.holds = false;
    }
    return report;
}

double default_monotonicity_tol(const Trajectory& traj) {
    double diam = traj.grid().diameter();
    return 10.0 * (traj.meta.h + traj.meta.dt) * diam * diam;
}

double lipschitz_beta(double alpha, double rate, double s_norm, double lip_G_x, double lip_F_x,
                      double lip_U0) {
    if (alpha < 0.0) throw std::invalid_argument("lipschitz_beta: alpha must be >= 0");
    if (alpha == 0.0) return 0.0;
    double expansion = std::max(s_norm * s_norm - 1.0, 0.0);
    double denom = rate * expansion + lip_G_x + 2.0 * lip_F_x;
    if (denom <= 0.0) return lip_U0; // unbounded-denominator case
    return std::min(alpha / denom, lip_U0);
}

BetaGammaSchedule beta_gamma_schedule(ScheduleCase which, const LipschitzBudget& c, double t_f,
                                      double beta0, int steps) {
    if (!(t_f > 0.0)) throw std::invalid_argument("beta_gamma_schedule: t_f must be > 0");
    if (steps < 2) throw std::invalid_argument("beta_gamma_schedule: need at least 2 steps");

    BetaGammaSchedule sched;
    const double expansion = std::max(c.s_norm * c.s_norm - 1.0, 0.0);
    const double dt = t_f / steps;

    if (which == ScheduleCase::GMonotone) {
        double k = 2.0 * c.lip_F_x + c.lip_G_x + expansion * c.rate;
        for (int i = 0; i <= steps; ++i) {
            double t = (i == steps) ? t_f : i * dt;
            sched.times.push_back(t);
            sched.beta.push_back(c.alpha * std::exp(-k * t));
            sched.gamma.push_back(0.0);
        }
        sched.valid = c.alpha > 0.0;
        if (!sched.valid) sched.crossing_time = 0.0;
        return sched;
    }

    if (!(beta0 > 0.0))
        throw std::invalid_argument("beta_gamma_schedule: F-monotone case needs beta0 > 0");

    // d(beta)/dt = alpha - beta*(lip_G_x + 2 lip_F_x + rate*(1-|S|^2)^-) - gamma*lip_F_u
    // d(gamma)/dt = gamma*(-rate*(1-|S|^2)^- + lip_F_u + 2 lip_G_u) + beta*lip_G_x
    auto rhs = [&](const Eigen::Vector2d& bg) -> Eigen::Vector2d {
        double b = bg[0], g = bg[1];
        Eigen::Vector2d out;
        out[0] = c.alpha - b * (c.lip_G_x + 2.0 * c.lip_F_x + c.rate * expansion) -
                 g * c.lip_F_u;
        out[1] = g * (-c.rate * expansion + c.lip_F_u + 2.0 * c.lip_G_u) + b * c.lip_G_x;
        return out;
    };

    Eigen::Vector2d bg(beta0, beta0 * c.lip_U0 * c.lip_U0);
    sched.valid = true;
    sched.times.push_back(0.0);
    sched.beta.push_back(bg[0]);
    sched.gamma.push_back(bg[1]);
    for (int i = 0; i < steps; ++i) {
        Eigen::Vector2d k1 = rhs(bg);
        Eigen::Vector2d k2 = rhs(bg + 0.5 * dt * k1);
        Eigen::Vector2d k3 = rhs(bg + 0.5 * dt * k2);
        Eigen::Vector2d k4 = rhs(bg + dt * k3);
        Eigen::Vector2d next = bg + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        double t = (i == steps - 1) ? t_f : (i + 1) * dt;
        if (sched.valid && next[0] <= 0.0) {
            sched.valid = false;
            // linear estimate of the crossing inside the step
            double frac = bg[0] / (bg[0] - next[0]);
            sched.crossing_time = sched.times.back() + frac * dt;
        }
        bg = next;
        sched.times.push_back(t);
        sched.beta.push_back(bg[0]);
        sched.gamma.push_back(bg[1]);
    }
    return sched;
}

std::vector<double> measured_lipschitz(const Trajectory& traj) {
    const Grid& g = traj.grid();
    std::vector<double> out;
    out.reserve(traj.times.size());
    for (const ValueField& U : traj.fields) {
        double lip = 0.0;
        for (long i = 0; i < g.node_count(); ++i) {
            for (int ax = 0; ax < g.dim(); ++ax) {
                long nb = g.neighbor(i, ax, +1);
                if (nb < 0) continue;
                double diff = (U.values.row(nb) - U.values.row(i)).norm() / g.spacing[ax];
                lip = std::max(lip, diff);
            }
        }
        out.push_back(lip);
    }
    return out;
}

MaxPrincipleResult max_principle_check(const ScalarTrajectory& traj, double tol) {
    if (traj.values.empty()) throw std::invalid_argument("max_principle_check: empty trajectory");
    MaxPrincipleResult res;
    res.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < traj.values.size(); ++t) {
        for (long i = 0; i < traj.values[t].size(); ++i) {
            double v = traj.values[t][i];
            if (!std::isfinite(v))
                throw std::invalid_argument("max_principle_check: non-finite value");
            if (v < res.min_value) {
                res.min_value = v;
                res.arg_time = t;
                res.arg_node = i;
            }
        }
    }
    res.holds = res.min_value >= -tol;
    return res;
}

} // namespace mfg
