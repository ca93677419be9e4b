#include "mfg/characteristics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mfg/rng.hpp"

namespace mfg {

namespace {

void check_finite(const Vec& v, double s) {
    if (!v.allFinite())
        throw std::runtime_error("characteristics: non-finite state at s = " + std::to_string(s));
}

// one classical RK4 step of dz/ds = f(s, z) from s to s + h (h may be < 0)
Vec rk4_step(const std::function<Vec(double, const Vec&)>& f, double s, const Vec& z, double h) {
    Vec k1 = f(s, z);
    Vec k2 = f(s + 0.5 * h, z + (0.5 * h) * k1);
    Vec k3 = f(s + 0.5 * h, z + (0.5 * h) * k2);
    Vec k4 = f(s + h, z + h * k3);
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class MeshTag { Regular, JumpMinus, JumpPlus };

struct MeshEntry {
    double time;
    MeshTag tag;
};

// uniform mesh on [0, t] with each jump time inserted twice (both sides)
std::vector<MeshEntry> build_mesh(double t, double dt, const std::vector<double>& jumps) {
    long n = std::max<long>(1, static_cast<long>(std::ceil(t / dt - 1e-12)));
    double dts = t / n;
    std::vector<MeshEntry> mesh;
    mesh.reserve(n + 1 + 2 * jumps.size());
    std::size_t jn = 0;
    for (long k = 0; k <= n; ++k) {
        double tk = (k == n) ? t : k * dts;
        while (jn < jumps.size() && jumps[jn] < tk) {
            mesh.push_back({jumps[jn], MeshTag::JumpMinus});
            mesh.push_back({jumps[jn], MeshTag::JumpPlus});
            ++jn;
        }
        mesh.push_back({tk, MeshTag::Regular});
    }
    return mesh;
}

std::vector<double> sample_jump_times(double rate, double t, Rng& rng) {
    std::vector<double> jumps;
    if (rate <= 0.0) return jumps;
    double s = rng.next_exponential(rate);
    while (s < t) {
        if (s > 0.0) jumps.push_back(s);
        s += rng.next_exponential(rate);
    }
    return jumps;
}

} // namespace

double condition_number(const Mat& S) {
    Eigen::JacobiSVD<Mat> svd(S);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

CharPath solve_fb_characteristics(const Vec& x0, const std::function<Vec(const Vec&)>& U0_eval,
                                  const Coupling& coupling, double t_f, double dt) {
    if (!(t_f > 0.0)) throw std::invalid_argument("solve_fb_characteristics: t_f must be > 0");
    const int d = static_cast<int>(x0.size());
    long n = std::max<long>(1, static_cast<long>(std::ceil(t_f / dt - 1e-12)));
    double dts = t_f / n;

    auto f = [&](double, const Vec& z) -> Vec {
        Vec y = z.head(d), v = z.tail(z.size() - d);
        Vec out(z.size());
        out.head(d) = coupling.F(y, v);
        out.tail(z.size() - d) = coupling.G(y, v);
        return out;
    };

    Vec v0 = U0_eval(x0);
    Vec z(d + v0.size());
    z.head(d) = x0;
    z.tail(v0.size()) = v0;

    CharPath path;
    path.times.push_back(0.0);
    path.Y.push_back(x0);
    path.V.push_back(v0);
    for (long k = 0; k < n; ++k) {
        double s = k * dts;
        z = rk4_step(f, s, z, dts);
        check_finite(z, s + dts);
        path.times.push_back((k == n - 1) ? t_f : s + dts);
        path.Y.push_back(z.head(d));
        path.V.push_back(z.tail(v0.size()));
    }
    return path;
}

CharCompareReport compare_characteristics_to_grid(const Trajectory& traj,
                                                  const Coupling& coupling,
                                                  const std::vector<Vec>& sample_points,
                                                  double dt) {
    const Grid& g = traj.grid();
    const int d = g.dim();
    CharCompareReport report;

    auto f = [&](double, const Vec& z) -> Vec {
        Vec y = z.head(d), v = z.tail(d);
        Vec out(2 * d);
        out.head(d) = coupling.F(y, v);
        out.tail(d) = coupling.G(y, v);
        return out;
    };

    for (const Vec& x0 : sample_points) {
        CharCompareEntry entry;
        entry.x0 = x0;
        Vec z(2 * d);
        z.head(d) = x0;
        z.tail(d) = interpolate(traj.fields.front(), x0);

        for (std::size_t j = 0; j + 1 < traj.times.size(); ++j) {
            double a = traj.times[j], b = traj.times[j + 1];
            long n = std::max<long>(1, static_cast<long>(std::ceil((b - a) / dt - 1e-12)));
            double dts = (b - a) / n;
            for (long k = 0; k < n; ++k) z = rk4_step(f, a + k * dts, z, dts);
            check_finite(z, b);
            Vec y = z.head(d);
            if (!g.contains(y)) {
                entry.left_box = true;
                break; // truncate the comparison at the box exit
            }
            double gap = (interpolate(traj.fields[j + 1], y) - z.tail(d)).cwiseAbs().maxCoeff();
            entry.max_gap = std::max(entry.max_gap, gap);
        }
        report.max_gap = std::max(report.max_gap, entry.max_gap);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

CharPath simulate_jump_characteristics(const Vec& x0, double t, const Trajectory& traj,
                                       const Coupling& coupling, const AffineJump& J,
                                       double jump_rate, double discount, double dt,
                                       std::uint64_t seed) {
    if (!(t > 0.0)) throw std::invalid_argument("simulate_jump_characteristics: t must be > 0");
    if (t > traj.times.back() + 1e-9)
        throw std::invalid_argument("simulate_jump_characteristics: t exceeds the trajectory");
    if (jump_rate < 0.0)
        throw std::invalid_argument("simulate_jump_characteristics: rate must be >= 0");
    double cond = condition_number(J.S);
    if (!std::isfinite(cond) || cond > 1e12)
        throw std::invalid_argument(
            "simulate_jump_characteristics: S must be invertible (backward pinning inverts "
            "the jumps); condition number = " + std::to_string(cond));

    Mat Sinv = J.S.inverse();
    Mat St = J.S.transpose();

    Rng rng(seed);
    std::vector<double> jumps = sample_jump_times(jump_rate, t, rng);
    std::vector<MeshEntry> mesh = build_mesh(t, dt, jumps);
    const std::size_t m = mesh.size();

    // backward sweep: Y pinned at the final time
    auto fy = [&](double s, const Vec& y) -> Vec { return coupling.F(y, traj.eval(s, y)); };
    std::vector<Vec> Y(m);
    Y[m - 1] = x0;
    for (std::size_t i = m - 1; i-- > 0;) {
        if (mesh[i].tag == MeshTag::JumpMinus) {
            Y[i] = Sinv * (Y[i + 1] - J.e);
        } else {
            double h = mesh[i].time - mesh[i + 1].time;
            Y[i] = (h == 0.0) ? Y[i + 1] : rk4_step(fy, mesh[i + 1].time, Y[i + 1], h);
        }
        check_finite(Y[i], mesh[i].time);
    }

    // forward sweep: V from the initial value, discounted between jumps
    std::vector<Vec> V(m);
    V[0] = interpolate(traj.fields.front(), Y[0]);
    for (std::size_t i = 1; i < m; ++i) {
        if (mesh[i].tag == MeshTag::JumpPlus) {
            V[i] = St * V[i - 1];
            continue;
        }
        double a = mesh[i - 1].time, b = mesh[i].time;
        if (b == a) {
            V[i] = V[i - 1];
            continue;
        }
        const Vec& ya = Y[i - 1];
        const Vec& yb = Y[i];
        auto fv = [&](double s, const Vec& v) -> Vec {
            double w = (s - a) / (b - a);
            Vec y = (1.0 - w) * ya + w * yb;
            return (-discount) * v + coupling.G(y, traj.eval(s, y));
        };
        V[i] = rk4_step(fv, a, V[i - 1], b - a);
        check_finite(V[i], b);
    }

    CharPath path;
    path.times.reserve(m);
    for (const auto& e : mesh) path.times.push_back(e.time);
    path.Y = std::move(Y);
    path.V = std::move(V);
    path.jump_times = std::move(jumps);
    path.seed = seed;
    return path;
}

McEstimate estimate_value_mc(const Vec& x0, double t, const Trajectory& traj,
                             const Coupling& coupling, const AffineJump& J, double jump_rate,
                             double discount, double dt, int n_paths, std::uint64_t seed,
                             int threads) {
    if (n_paths < 2) throw std::invalid_argument("estimate_value_mc: need n_paths >= 2");
    const int d = static_cast<int>(x0.size());

    std::vector<Vec> terminal(n_paths);
    std::vector<double> jump_counts(n_paths);

    auto run_range = [&](int begin, int end) {
        for (int p = begin; p < end; ++p) {
            CharPath path = simulate_jump_characteristics(x0, t, traj, coupling, J, jump_rate,
                                                          discount, dt, derive_seed(seed, p));
            terminal[p] = path.terminal_value();
            jump_counts[p] = static_cast<double>(path.jump_count());
        }
    };

    threads = std::max(1, threads);
    if (threads == 1) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        std::mutex error_mutex;
        std::exception_ptr error;
        int chunk = (n_paths + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            int begin = w * chunk, end = std::min(n_paths, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.mean = Vec::Zero(d);
    for (const Vec& v : terminal) est.mean += v;
    est.mean /= n_paths;

    Vec ssq = Vec::Zero(d);
    for (const Vec& v : terminal) ssq += (v - est.mean).cwiseAbs2();
    est.stderr_ = (ssq / (static_cast<double>(n_paths) * (n_paths - 1))).cwiseSqrt();

    double jm = 0.0;
    for (double c : jump_counts) jm += c;
    jm /= n_paths;
    double jssq = 0.0;
    for (double c : jump_counts) jssq += (c - jm) * (c - jm);
    est.mean_jumps = jm;
    est.stderr_jumps = std::sqrt(jssq / (static_cast<double>(n_paths) * (n_paths - 1)));
    return est;
}

CharPath simulate_abm(const Vec& x0, const Coupling& coupling, const AffineJump& J, double rate,
                      double t_f, double dt, std::uint64_t seed) {
    if (!(t_f > 0.0)) throw std::invalid_argument("simulate_abm: t_f must be > 0");
    if (rate < 0.0) throw std::invalid_argument("simulate_abm: rate must be >= 0");
    const int d = static_cast<int>(x0.size());
    Vec zero = Vec::Zero(d);
    auto fy = [&](double, const Vec& y) -> Vec { return coupling.F(y, zero); };

    Rng rng(seed);
    std::vector<double> jumps = sample_jump_times(rate, t_f, rng);
    std::vector<MeshEntry> mesh = build_mesh(t_f, dt, jumps);

    CharPath path;
    path.seed = seed;
    path.jump_times = jumps;
    path.times.reserve(mesh.size());
    path.Y.reserve(mesh.size());
    Vec y = x0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (i > 0) {
            if (mesh[i].tag == MeshTag::JumpPlus) {
                y = J.apply(y);
            } else {
                double h = mesh[i].time - mesh[i - 1].time;
                if (h > 0.0) y = rk4_step(fy, mesh[i - 1].time, y, h);
            }
            check_finite(y, mesh[i].time);
        }
        path.times.push_back(mesh[i].time);
        path.Y.push_back(y);
        path.V.push_back(zero);
    }
    return path;
}

} // namespace mfg
