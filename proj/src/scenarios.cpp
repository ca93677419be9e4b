#include "mfg/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mfg/characteristics.hpp"
#include "mfg/field1d.hpp"
#include "mfg/master_eq.hpp"
#include "mfg/mfg1d.hpp"
#include "mfg/monotonicity.hpp"
#include "mfg/rng.hpp"

namespace mfg {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------- params

class Params {
public:
    explicit Params(const json& config) : provided_(config) {
        if (!config.is_object()) throw ConfigError("config must be a JSON object");
        for (const char* meta : {"scenario", "seed", "out_dir"}) accessed_.insert(meta);
    }

    double number(const std::string& key, double def) {
        return fetch<double>(key, def, [](const json& v) { return v.is_number(); });
    }

    double positive(const std::string& key, double def) {
        double v = number(key, def);
        if (!(v > 0.0)) throw ConfigError("parameter '" + key + "' must be > 0");
        return v;
    }

    double nonneg(const std::string& key, double def) {
        double v = number(key, def);
        if (v < 0.0) throw ConfigError("parameter '" + key + "' must be >= 0");
        return v;
    }

    long integer(const std::string& key, long def) {
        return fetch<long>(key, def, [](const json& v) { return v.is_number_integer(); });
    }

    long positive_int(const std::string& key, long def) {
        long v = integer(key, def);
        if (v <= 0) throw ConfigError("parameter '" + key + "' must be a positive integer");
        return v;
    }

    bool flag(const std::string& key, bool def) {
        return fetch<bool>(key, def, [](const json& v) { return v.is_boolean(); });
    }

    std::string str(const std::string& key, const std::string& def) {
        return fetch<std::string>(key, def, [](const json& v) { return v.is_string(); });
    }

    std::vector<double> vec(const std::string& key, const std::vector<double>& def) {
        return fetch<std::vector<double>>(key, def, [](const json& v) { return v.is_array(); });
    }

    Mat matrix(const std::string& key, const Mat& def) {
        accessed_.insert(key);
        if (!provided_.contains(key)) {
            defaulted_.insert(key);
            std::vector<std::vector<double>> rows;
            for (int r = 0; r < def.rows(); ++r) {
                std::vector<double> row;
                for (int c = 0; c < def.cols(); ++c) row.push_back(def(r, c));
                rows.push_back(row);
            }
            effective_[key] = rows;
            return def;
        }
        const json& v = provided_.at(key);
        if (!v.is_array() || v.empty() || !v[0].is_array())
            throw ConfigError("parameter '" + key + "' must be a matrix (array of arrays)");
        int r = static_cast<int>(v.size());
        int c = static_cast<int>(v[0].size());
        Mat out(r, c);
        for (int i = 0; i < r; ++i) {
            if (static_cast<int>(v[i].size()) != c)
                throw ConfigError("parameter '" + key + "' has ragged rows");
            for (int j = 0; j < c; ++j) out(i, j) = v[i][j].get<double>();
        }
        effective_[key] = v;
        return out;
    }

    Vec vecd(const std::string& key, const Vec& def) {
        std::vector<double> d(def.data(), def.data() + def.size());
        std::vector<double> got = vec(key, d);
        Vec out(got.size());
        for (std::size_t i = 0; i < got.size(); ++i) out[i] = got[i];
        return out;
    }

    json echo() const {
        json out;
        out["parameters"] = effective_;
        out["defaulted"] = std::vector<std::string>(defaulted_.begin(), defaulted_.end());
        return out;
    }

    void finish() const {
        std::vector<std::string> unknown;
        for (auto it = provided_.begin(); it != provided_.end(); ++it)
            if (!accessed_.contains(it.key())) unknown.push_back(it.key());
        if (!unknown.empty()) {
            std::string msg = "unknown config keys:";
            for (const auto& k : unknown) msg += " '" + k + "'";
            throw ConfigError(msg);
        }
    }

private:
    template <typename T, typename Check>
    T fetch(const std::string& key, const T& def, Check check) {
        accessed_.insert(key);
        if (!provided_.contains(key)) {
            defaulted_.insert(key);
            effective_[key] = def;
            return def;
        }
        const json& v = provided_.at(key);
        if (!check(v)) throw ConfigError("parameter '" + key + "' has the wrong type");
        effective_[key] = v;
        return v.get<T>();
    }

    json provided_;
    json effective_;
    std::set<std::string> accessed_;
    std::set<std::string> defaulted_;
};

// ------------------------------------------------------------------ csv I/O

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
        out_ << header << "\n";
    }
    Csv& cell(double v) { return raw(g17(v)); }
    Csv& cell(long v) { return raw(std::to_string(v)); }
    Csv& cell(int v) { return raw(std::to_string(v)); }
    Csv& cell(const std::string& s) { return raw(s); }
    void endrow() {
        out_ << "\n";
        first_ = true;
    }

private:
    Csv& raw(const std::string& s) {
        if (!first_) out_ << ",";
        out_ << s;
        first_ = false;
        return *this;
    }
    std::ofstream out_;
    bool first_ = true;
};

struct Ctx {
    fs::path out_dir;
    std::uint64_t seed = 1;
    int threads = 1;
    json outputs = json::array();

    fs::path file(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }
};

// --------------------------------------------------------------- field prep

ScalarField1D bump_density(int n, double center, double kappa) {
    return ScalarField1D::density_from_function(n, [=](double x) {
        return std::exp(kappa * (std::cos(kTwoPi * (x - center)) - 1.0));
    });
}

struct MasterSetup {
    Grid grid;
    ValueField U0;
    Coupling coupling;
    double t_f, dt, discount;
};

MasterSetup master_setup(Params& P, const std::vector<double>& box_lo,
                         const std::vector<double>& box_hi, const Mat& A0, const Mat& B0,
                         const Mat& C0, const Mat& D0, double t_f_def = 1.0,
                         double dt_def = -1.0, double discount_def = 0.0) {
    std::vector<double> lo = P.vec("box_lower", box_lo);
    std::vector<double> hi = P.vec("box_upper", box_hi);
    if (lo.size() != hi.size()) throw ConfigError("box_lower/box_upper size mismatch");
    const int d = static_cast<int>(lo.size());
    long nodes = P.positive_int("nodes_per_axis", 41);
    Vec lower(d), upper(d);
    for (int a = 0; a < d; ++a) {
        lower[a] = lo[a];
        upper[a] = hi[a];
    }
    Grid grid = build_grid(lower, upper, std::vector<int>(d, static_cast<int>(nodes)));

    MasterSetup s{grid, {}, {}, 0, 0, 0};
    s.t_f = P.positive("t_f", t_f_def);
    s.dt = P.positive("dt", dt_def > 0.0 ? dt_def : grid.max_spacing() / 8.0);
    s.discount = P.nonneg("discount", discount_def);

    Mat M0 = P.matrix("u0_matrix", Mat::Identity(d, d));
    Vec b0 = P.vecd("u0_offset", Vec::Zero(d));
    Vec center = P.vecd("u0_center", 0.5 * (lower + upper));
    s.U0 = ValueField::from_function(grid, d, [&](const Vec& x) -> Vec {
        return M0 * (x - center) + b0;
    });

    Mat A = P.matrix("coupling_a", A0);
    Mat B = P.matrix("coupling_b", B0);
    Mat C = P.matrix("coupling_c", C0);
    Mat D = P.matrix("coupling_d", D0);
    bool certify = P.flag("certify_monotone", true);
    s.coupling = certify ? Coupling::linear(A, B, C, D) : Coupling::linear_unverified(A, B, C, D);
    return s;
}

MasterSetup default_master_setup(Params& P) {
    Mat I2 = Mat::Identity(2, 2);
    return master_setup(P, {0.0, 0.0}, {4.0, 4.0}, 0.3 * I2, 0.1 * I2, 0.1 * I2, 0.3 * I2);
}

AffineJump jump_from_params(Params& P, const std::string& skey, const std::string& ekey,
                            const Mat& sdef, const Vec& edef) {
    Mat S = P.matrix(skey, sdef);
    Vec e = P.vecd(ekey, edef);
    return AffineJump::make(S, e);
}

void write_master_trajectory(Ctx& ctx, const Trajectory& traj, long slices) {
    const Grid& g = traj.grid();
    const int d = g.dim();
    std::string header = "time,node";
    for (int a = 0; a < d; ++a) header += ",x" + std::to_string(a);
    header += ",component,value";
    Csv csv(ctx.file("trajectory.csv"), header);

    std::size_t count = traj.times.size();
    std::size_t stride = std::max<std::size_t>(1, (count - 1) / std::max<long>(1, slices - 1));
    for (std::size_t j = 0; j < count; ++j) {
        if (j % stride != 0 && j + 1 != count) continue;
        for (long i = 0; i < g.node_count(); ++i) {
            Vec x = g.node_coordinate(i);
            for (int c = 0; c < d; ++c) {
                csv.cell(traj.times[j]).cell(i);
                for (int a = 0; a < d; ++a) csv.cell(x[a]);
                csv.cell(c).cell(traj.fields[j].values(i, c));
                csv.endrow();
            }
        }
    }
}

void write_mfg_trajectory(Ctx& ctx, const MfgSolution1D& sol, long slices) {
    Csv csv(ctx.file("trajectory.csv"), "time,node,x,field,value");
    std::size_t count = sol.times.size();
    std::size_t stride = std::max<std::size_t>(1, (count - 1) / std::max<long>(1, slices - 1));
    for (std::size_t j = 0; j < count; ++j) {
        if (j % stride != 0 && j + 1 != count) continue;
        for (int i = 0; i < sol.u[j].n; ++i) {
            csv.cell(sol.times[j]).cell(static_cast<long>(i)).cell(sol.u[j].node_x(i));
            csv.cell(std::string("u")).cell(sol.u[j].values[i]);
            csv.endrow();
            csv.cell(sol.times[j]).cell(static_cast<long>(i)).cell(sol.m[j].node_x(i));
            csv.cell(std::string("m")).cell(sol.m[j].values[i]);
            csv.endrow();
        }
    }
}

NoiseSpec noise_for_master_scenario(const std::string& scenario, Params& P) {
    Mat S1(2, 2);
    S1 << 0.9, 0.05, 0.05, 0.9;
    Vec e1(2);
    e1 << 0.1, -0.1;
    Mat Sswap(2, 2);
    Sswap << 0.0, 1.0, 1.0, 0.0;

    if (scenario == "master-noiseless") return NoiseNone{};
    if (scenario == "master-jump-deterministic") {
        double t1 = P.positive("t1", 0.5);
        return DeterministicJump{t1, jump_from_params(P, "jump_s", "jump_e", S1, e1)};
    }
    if (scenario == "master-poisson-common") {
        double rate = P.nonneg("rate", 2.0);
        return CommonPoisson{rate, jump_from_params(P, "jump_s", "jump_e", S1, e1)};
    }
    if (scenario == "master-poisson-iid") {
        double rate = P.nonneg("rate", 2.0);
        return IidPoisson{rate, jump_from_params(P, "jump_s", "jump_e", S1, e1)};
    }
    // master-mixture
    double rate = P.nonneg("rate", 2.0);
    double w1 = P.number("mixture_weight_1", 0.5);
    AffineJump J1 = jump_from_params(P, "jump_s", "jump_e", S1, e1);
    AffineJump J2 = jump_from_params(P, "jump2_s", "jump2_e", Sswap, Vec::Zero(2));
    return Mixture{rate, {{J1, w1}, {J2, 1.0 - w1}}};
}

// ---------------------------------------------------------------- scenarios

json scenario_master(const std::string& name, Params& P, Ctx& ctx) {
    MasterSetup s = default_master_setup(P);
    NoiseSpec noise = validate_noise(noise_for_master_scenario(name, P));
    long slices = P.positive_int("trajectory_slices", 9);

    Trajectory traj = solve_master(s.U0, s.coupling, noise, s.t_f, s.dt, s.discount);
    write_master_trajectory(ctx, traj, slices);

    json out;
    out["final_sup_norm"] = traj.fields.back().max_abs();
    out["output_times"] = traj.times.size();
    out["scheme"] = {{"name", traj.meta.scheme},
                     {"dt", traj.meta.dt},
                     {"h", traj.meta.h},
                     {"cfl", traj.meta.cfl}};
    return out;
}

json scenario_asymptotic(Params& P, Ctx& ctx) {
    Mat Z = Mat::Zero(2, 2);
    MasterSetup s = master_setup(P, {-2.0, -2.0}, {2.0, 2.0}, Z, Z, Z, Z);
    Mat S = P.matrix("s_matrix", -0.3 * Mat::Identity(2, 2));
    std::vector<double> eps = P.vec("epsilon_list", {0.2, 0.1, 0.05});
    s.dt = P.positive("dt", 0.005);

    Trajectory limit = solve_asymptotic(s.U0, s.coupling, S, AsymptoticOrder::First, s.t_f,
                                        s.dt);

    Csv csv(ctx.file("asymptotic_gaps.csv"), "epsilon,sup_gap,ratio_to_previous");
    json gaps = json::array();
    double prev = -1.0;
    json ratios = json::array();
    for (double e : eps) {
        AffineJump J = AffineJump::make(Mat::Identity(2, 2) + e * S, Vec::Zero(2));
        Trajectory traj = solve_master(s.U0, s.coupling, CommonPoisson{1.0 / e, J}, s.t_f,
                                       s.dt, 0.0);
        double gap = sup_distance(traj.fields.back(), limit.fields.back());
        double ratio = prev > 0.0 ? prev / gap : 0.0;
        csv.cell(e).cell(gap).cell(ratio);
        csv.endrow();
        gaps.push_back(gap);
        if (prev > 0.0) ratios.push_back(ratio);
        prev = gap;
    }
    json out;
    out["terminal_sup_gaps"] = gaps;
    out["consecutive_ratios"] = ratios;
    return out;
}

json scenario_characteristics(Params& P, Ctx& ctx) {
    MasterSetup s = default_master_setup(P);
    double amp = P.number("u0_wave_amplitude", 0.3);
    double freq = P.number("u0_wave_frequency", 0.8);
    Vec center = 0.5 * (s.grid.lower + s.grid.upper);
    s.U0 = ValueField::from_function(s.grid, s.grid.dim(), [&](const Vec& x) -> Vec {
        Vec v(x.size());
        for (int a = 0; a < x.size(); ++a)
            v[a] = (x[a] - center[a]) + amp * std::sin(freq * (x[a] - center[a]));
        return v;
    });

    long n_points = P.positive_int("sample_points", 10);
    double margin = P.number("sample_margin", 1.2);
    Trajectory traj = solve_master(s.U0, s.coupling, NoiseNone{}, s.t_f, s.dt, 0.0);

    Rng rng(ctx.seed);
    std::vector<Vec> points;
    for (long k = 0; k < n_points; ++k) {
        Vec p(s.grid.dim());
        for (int a = 0; a < s.grid.dim(); ++a) {
            double lo = s.grid.lower[a] + margin, hi = s.grid.upper[a] - margin;
            p[a] = lo + (hi - lo) * rng.next_unit();
        }
        points.push_back(p);
    }

    CharCompareReport report = compare_characteristics_to_grid(traj, s.coupling, points, s.dt);
    std::string header;
    for (int a = 0; a < s.grid.dim(); ++a) header += "x" + std::to_string(a) + ",";
    Csv csv(ctx.file("char_compare.csv"), header + "max_gap,left_box");
    for (const auto& e : report.entries) {
        for (int a = 0; a < s.grid.dim(); ++a) csv.cell(e.x0[a]);
        csv.cell(e.max_gap).cell(std::string(e.left_box ? "true" : "false"));
        csv.endrow();
    }
    json out;
    out["max_gap"] = report.max_gap;
    out["h_plus_dt"] = traj.meta.h + traj.meta.dt;
    return out;
}

json scenario_mc_value(Params& P, Ctx& ctx) {
    Mat I2 = Mat::Identity(2, 2);
    MasterSetup s = master_setup(P, {-2.0, -2.0}, {2.0, 2.0}, 0.2 * I2, 0.1 * I2, 0.1 * I2,
                                 0.2 * I2, /*t_f=*/0.8, /*dt=*/0.01, /*discount=*/0.5);
    double rate = P.nonneg("jump_rate", 3.0);
    Mat Sdef(2, 2);
    Sdef << 0.9, 0.1, 0.0, 0.8;
    Vec edef(2);
    edef << 0.05, 0.05;
    AffineJump J = jump_from_params(P, "jump_s", "jump_e", Sdef, edef);
    long n_paths = P.positive_int("n_paths", 10000);
    Vec x0 = P.vecd("x0", Vec::Zero(2));

    Trajectory traj = solve_master(s.U0, s.coupling, CommonPoisson{rate, J}, s.t_f, s.dt,
                                   s.discount);
    McEstimate est = estimate_value_mc(x0, s.t_f, traj, s.coupling, J, rate, s.discount, s.dt,
                                       static_cast<int>(n_paths), ctx.seed, ctx.threads);
    Vec grid_value = traj.eval(s.t_f, x0);

    Csv csv(ctx.file("mc_value.csv"), "component,mc_mean,mc_stderr,grid_value,abs_gap");
    for (int c = 0; c < grid_value.size(); ++c) {
        csv.cell(c).cell(est.mean[c]).cell(est.stderr_[c]).cell(grid_value[c]);
        csv.cell(std::abs(est.mean[c] - grid_value[c]));
        csv.endrow();
    }

    json out;
    out["n_paths"] = est.n_paths;
    out["mean_jumps"] = est.mean_jumps;
    out["stderr_jumps"] = est.stderr_jumps;
    out["expected_jumps"] = rate * s.t_f;
    out["condition_number_s"] = condition_number(J.S);
    out["max_abs_gap"] = (est.mean - grid_value).cwiseAbs().maxCoeff();
    out["max_stderr"] = est.stderr_.maxCoeff();
    return out;
}

json scenario_abm(Params& P, Ctx& ctx) {
    Mat Cdef(2, 2);
    Cdef << 0.0, -0.5, 0.5, 0.0;
    Mat C = P.matrix("coupling_c", Cdef); // drift of the flow: F(y,0) = C y
    Mat Z = Mat::Zero(2, 2);
    Coupling coupling = Coupling::linear_unverified(Z, Z, C, Z);
    Mat Sswap(2, 2);
    Sswap << 0.0, 1.0, 1.0, 0.0;
    AffineJump J = jump_from_params(P, "jump_s", "jump_e", Sswap, Vec::Zero(2));
    double rate = P.nonneg("rate", 1.5);
    double t_f = P.positive("t_f", 2.0);
    double dt = P.positive("dt", 0.005);
    Vec x0 = P.vecd("x0", (Vec(2) << 1.0, 0.5).finished());

    CharPath path = simulate_abm(x0, coupling, J, rate, t_f, dt, ctx.seed);
    Csv csv(ctx.file("abm_path.csv"), "time,component,value");
    for (std::size_t j = 0; j < path.times.size(); ++j)
        for (int c = 0; c < path.Y[j].size(); ++c) {
            csv.cell(path.times[j]).cell(c).cell(path.Y[j][c]);
            csv.endrow();
        }

    json out;
    out["n_jumps"] = path.jump_count();
    out["jump_times"] = path.jump_times;
    json yf = json::array();
    for (int c = 0; c < path.Y.back().size(); ++c) yf.push_back(path.Y.back()[c]);
    out["final_state"] = yf;
    return out;
}

json scenario_monotonicity(Params& P, Ctx& ctx) {
    std::string noise_name = P.str("noise", "common");
    MasterSetup s = default_master_setup(P);

    std::string master_name = "master-noiseless";
    if (noise_name == "deterministic") master_name = "master-jump-deterministic";
    else if (noise_name == "common") master_name = "master-poisson-common";
    else if (noise_name == "iid") master_name = "master-poisson-iid";
    else if (noise_name == "mixture") master_name = "master-mixture";
    else if (noise_name != "none")
        throw ConfigError("noise must be one of none/deterministic/common/iid/mixture");
    NoiseSpec noise = validate_noise(noise_for_master_scenario(master_name, P));

    Trajectory traj = solve_master(s.U0, s.coupling, noise, s.t_f, s.dt, s.discount);
    double tol = P.number("tolerance", default_monotonicity_tol(traj));
    PairStrategy strategy;
    if (traj.grid().node_count() <= 41 * 41)
        strategy = AllNodePairs{};
    else
        strategy = RandomPairs{P.positive_int("random_pairs", 100000), ctx.seed};
    MonotonicityReport report = verify_propagation(traj, strategy, tol);

    Csv csv(ctx.file("monotonicity_report.csv"), "time,min_pairing,argmin_i,argmin_j");
    for (std::size_t j = 0; j < report.times.size(); ++j) {
        csv.cell(report.times[j]).cell(report.min_pairing[j]);
        csv.cell(report.argmin_pair[j].first).cell(report.argmin_pair[j].second);
        csv.endrow();
    }

    json out;
    out["noise"] = noise_name;
    out["holds"] = report.holds;
    out["tolerance"] = report.tol;
    out["pair_count"] = report.pair_count;
    double worst = report.min_pairing.front();
    for (double v : report.min_pairing) worst = std::min(worst, v);
    out["worst_pairing"] = worst;
    return out;
}

json scenario_lipschitz(Params& P, Ctx& ctx) {
    Mat I2 = Mat::Identity(2, 2);
    MasterSetup s = master_setup(P, {-2.0, -2.0}, {2.0, 2.0}, I2, Mat::Zero(2, 2),
                                 Mat::Zero(2, 2), 0.5 * I2);
    double angle = P.number("jump_rotation", 0.5);
    Mat Srot(2, 2);
    Srot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Vec erot(2);
    erot << 0.05, -0.05;
    AffineJump J = jump_from_params(P, "jump_s", "jump_e", Srot, erot);
    std::vector<double> rates = P.vec("rates", {0.0, 1.0, 10.0});

    // alpha: joint monotonicity modulus of the (G,F) block and of U0 = x
    const auto& cert = std::get<LinearBlockCertificate>(s.coupling.certificate);
    double lip_u0 = 1.0;
    double alpha = std::min(cert.alpha, 1.0);

    LipschitzBudget budget;
    budget.alpha = alpha;
    budget.s_norm = J.op_norm_S;
    budget.lip_G_x = s.coupling.lip_G_x;
    budget.lip_F_x = s.coupling.lip_F_x;
    budget.lip_F_u = s.coupling.lip_F_u;
    budget.lip_G_u = s.coupling.lip_G_u;
    budget.lip_U0 = lip_u0;

    Csv csv(ctx.file("lipschitz_report.csv"),
            "rate,time,measured_lipschitz,beta,beta_inverse_bound,schedule_beta");
    json betas = json::array();
    double worst_excess = 0.0;
    for (double rate : rates) {
        double beta = lipschitz_beta(alpha, rate, J.op_norm_S, budget.lip_G_x, budget.lip_F_x,
                                     lip_u0);
        betas.push_back(beta);
        budget.rate = rate;
        Trajectory traj = solve_master(s.U0, s.coupling, CommonPoisson{rate, J}, s.t_f, s.dt,
                                       s.discount);
        BetaGammaSchedule sched =
            beta_gamma_schedule(ScheduleCase::GMonotone, budget, s.t_f, 0.0);
        std::vector<double> measured = measured_lipschitz(traj);
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            double t = traj.times[j];
            std::size_t sj = 0;
            for (; sj + 1 < sched.times.size() && sched.times[sj] < t; ++sj) {}
            csv.cell(rate).cell(t).cell(measured[j]).cell(beta).cell(1.0 / beta);
            csv.cell(sched.beta[sj]);
            csv.endrow();
            worst_excess = std::max(worst_excess, measured[j] * beta);
        }
    }

    json out;
    out["alpha"] = alpha;
    out["beta_per_rate"] = betas;
    out["s_norm"] = J.op_norm_S;
    out["max_measured_times_beta"] = worst_excess; // <= 1.1 when the bound holds
    out["bound_holds"] = worst_excess <= 1.1;
    bool all_equal = true;
    for (const auto& b : betas) all_equal = all_equal && (b.get<double>() == betas[0].get<double>());
    out["beta_rate_independent"] = all_equal;
    return out;
}

json scenario_momentum(Params& P, Ctx& ctx) {
    long n = P.positive_int("n", 64);
    double nu = P.positive("nu", 0.1);
    double horizon = P.positive("horizon", 0.5);
    double h = 1.0 / static_cast<double>(n);
    double dt = P.positive("dt", 0.2 * h * h / nu);
    double phi_amp = P.number("phi_amplitude", 0.05);
    double bump_center = P.number("m0_center", 0.3);
    double bump_kappa = P.positive("m0_kappa", 6.0);
    double lambda = P.nonneg("lambda_disc", 0.0);

    HamiltonianSpec H = HamiltonianSpec::separable_quadratic(
        0.5, [](double m) { return m; }, [](double) { return 1.0; });
    ScalarField1D phi = ScalarField1D::from_function(
        static_cast<int>(n), [&](double x) { return phi_amp * std::cos(kTwoPi * x); });
    ScalarField1D m0 = bump_density(static_cast<int>(n), bump_center, bump_kappa);

    MfgSolution1D sol = solve_mfg_discounted(H, lambda, std::nullopt, nu, horizon, m0,
                                             TerminalCondition{phi}, dt);
    MomentumSeries series = conserved_momentum(sol);
    double bound = 10.0 * (h * h + sol.dt);

    write_mfg_trajectory(ctx, sol, P.positive_int("trajectory_slices", 9));
    Csv csv(ctx.file("momentum.csv"), "time,A");
    for (std::size_t j = 0; j < series.times.size(); ++j) {
        csv.cell(series.times[j]).cell(series.A[j]);
        csv.endrow();
    }

    json out;
    out["max_drift"] = series.max_drift;
    out["bound"] = bound;
    out["conserved"] = series.max_drift <= bound;
    out["A0"] = series.A.front();
    out["picard_converged"] = sol.converged;

    if (P.flag("counterexample", true)) {
        double b_amp = P.number("counterexample_b_amplitude", 0.8);
        double delta = P.positive("counterexample_delta", 0.1);
        double phix_amp = P.number("counterexample_phi_amplitude", 0.3);
        HamiltonianSpec Hx = HamiltonianSpec::quadratic(
            [b_amp](double, double x, double) { return b_amp * std::sin(kTwoPi * x); }, delta);
        ScalarField1D phix = ScalarField1D::from_function(
            static_cast<int>(n), [&](double x) { return phix_amp * std::cos(kTwoPi * x); });
        MfgSolution1D solx = solve_mfg_discounted(Hx, lambda, std::nullopt, nu, horizon, m0,
                                                  TerminalCondition{phix}, dt);
        MomentumSeries sx = conserved_momentum(solx);
        Csv cx(ctx.file("momentum_counterexample.csv"), "time,A");
        for (std::size_t j = 0; j < sx.times.size(); ++j) {
            cx.cell(sx.times[j]).cell(sx.A[j]);
            cx.endrow();
        }
        out["counterexample_max_drift"] = sx.max_drift;
        out["counterexample_exceeds_bound"] = sx.max_drift > bound;
    }
    return out;
}

json scenario_strong_coupling(Params& P, Ctx& ctx) {
    long n = P.positive_int("n", 128);
    double nu = P.positive("nu", 0.05);
    double horizon = P.positive("horizon", 1.0);
    double h = 1.0 / static_cast<double>(n);
    double dt = P.positive("dt", 0.4 * h * h / nu);
    double phi_amp = P.number("phi_amplitude", 0.025);
    double lambda_ctrl = P.nonneg("lambda_ctrl", 1.5);
    double c = P.positive("semiconcavity_c", 1.0);
    RootScanOptions scan;
    scan.A_min = P.number("scan_min", -5.0);
    scan.A_max = P.number("scan_max", 5.0);
    scan.n_scan = static_cast<int>(P.positive_int("scan_points", 2001));

    ScalarField1D phi = ScalarField1D::from_function(
        static_cast<int>(n), [&](double x) { return phi_amp * std::cos(kTwoPi * x); });
    ScalarField1D m0 = bump_density(static_cast<int>(n), P.number("m0_center", 0.25),
                                    P.positive("m0_kappa", 8.0));

    StrongCouplingResult result =
        solve_strong_coupling(phi, m0, lambda_ctrl, nu, horizon, dt, scan, c);

    Csv scan_csv(ctx.file("phi_scan.csv"), "A,phi_of_A");
    for (std::size_t k = 0; k < result.scan_A.size(); ++k) {
        scan_csv.cell(result.scan_A[k]).cell(result.scan_phi[k]);
        scan_csv.endrow();
    }

    Csv roots_csv(ctx.file("roots.csv"), "index,root,momentum_A0,momentum_drift");
    json roots = json::array();
    for (std::size_t r = 0; r < result.A_roots.size(); ++r) {
        MomentumSeries series = conserved_momentum(result.solutions[r]);
        roots_csv.cell(static_cast<long>(r)).cell(result.A_roots[r]);
        roots_csv.cell(series.A.front()).cell(series.max_drift);
        roots_csv.endrow();
        roots.push_back(result.A_roots[r]);
    }

    ScalarTrajectory1D u0 = cole_hopf_hjb(phi, nu, horizon, horizon / 64.0);
    SemiconcavityResult semi = semiconcavity_check(u0, c);

    json out;
    out["roots"] = roots;
    out["root_count"] = result.A_roots.size();
    out["threshold"] = result.threshold ? json(*result.threshold) : json();
    out["lambda_ctrl"] = lambda_ctrl;
    out["below_threshold"] = result.threshold && lambda_ctrl < *result.threshold;
    out["lip_phi"] = result.lip_phi;
    out["semiconcavity_holds"] = semi.holds;
    out["semiconcavity_max_violation"] = semi.max_violation;
    return out;
}

json scenario_threshold(Params& P, Ctx& ctx) {
    double c = P.positive("c", 1.0);
    double horizon = P.positive("horizon", 1.0);
    double threshold = uniqueness_threshold(c, horizon);

    json out;
    out["threshold"] = threshold;
    out["c"] = c;
    out["horizon"] = horizon;

    if (P.flag("verify_scan", true)) {
        long n = P.positive_int("n", 64);
        double nu = P.positive("nu", 0.05);
        double h = 1.0 / static_cast<double>(n);
        double dt = P.positive("dt", 0.4 * h * h / nu);
        double lambda_ctrl = P.nonneg("lambda_ctrl", 1.5);
        double phi_amp = P.number("phi_amplitude", 0.025);
        ScalarField1D phi = ScalarField1D::from_function(
            static_cast<int>(n), [&](double x) { return phi_amp * std::cos(kTwoPi * x); });
        ScalarField1D m0 = bump_density(static_cast<int>(n), 0.25, 8.0);
        StrongCouplingResult res =
            solve_strong_coupling(phi, m0, lambda_ctrl, nu, horizon, dt, {}, c);
        bool increasing = true;
        for (std::size_t k = 0; k + 1 < res.scan_A.size(); ++k) {
            double f0 = res.scan_A[k] - res.scan_phi[k];
            double f1 = res.scan_A[k + 1] - res.scan_phi[k + 1];
            if (f1 <= f0) increasing = false;
        }
        out["lambda_ctrl"] = lambda_ctrl;
        out["below_threshold"] = lambda_ctrl < threshold;
        out["root_count"] = res.A_roots.size();
        out["fixed_point_map_strictly_increasing"] = increasing;
    }
    (void)ctx;
    return out;
}

struct SweepDefaults {
    long n = 64;
    double nu = 0.05, horizon = 1.0;
};

json scenario_lambda_sweep(Params& P, Ctx& ctx) {
    SweepDefaults d;
    long n = P.positive_int("n", d.n);
    double nu = P.positive("nu", d.nu);
    double horizon = P.positive("horizon", d.horizon);
    // d.horizon = 1.0: long enough that the terminal layer does not distort
    // the 1/lambda decay at the smallest lambda
    double dt = P.positive("dt", 1e-3);
    std::vector<double> lambdas = P.vec("lambdas", {4.0, 8.0, 16.0, 32.0, 64.0});
    double f_coeff = P.number("f_coefficient", 1.0);

    HamiltonianSpec H = HamiltonianSpec::separable_quadratic(
        0.5, [f_coeff](double m) { return f_coeff * m; },
        [f_coeff](double) { return f_coeff; });
    ScalarField1D m0 = bump_density(static_cast<int>(n), P.number("m0_center", 0.5),
                                    P.positive("m0_kappa", 6.0));
    TerminalCondition terminal{ScalarField1D::constant(static_cast<int>(n), 0.0)};

    LambdaSweepTable table =
        lambda_sweep(lambdas, H, nu, m0, horizon, terminal, dt, {}, ctx.threads);

    Csv csv(ctx.file("lambda_sweep.csv"),
            "lambda,sup_u_l2,w1_max,converged,picard_iterations");
    json rows = json::array();
    for (const auto& row : table.rows) {
        csv.cell(row.is_infinite ? std::string("inf") : g17(row.lambda));
        csv.cell(row.sup_u_l2).cell(row.w1_max);
        csv.cell(std::string(row.converged ? "true" : "false"));
        csv.cell(static_cast<long>(row.picard_iterations));
        csv.endrow();
        json r;
        r["lambda"] = row.is_infinite ? json("inf") : json(row.lambda);
        r["sup_u_l2"] = row.sup_u_l2;
        r["w1_max"] = row.w1_max;
        r["converged"] = row.converged;
        rows.push_back(r);
    }

    json ratios = json::array();
    for (std::size_t r = 0; r + 2 < table.rows.size(); ++r)
        ratios.push_back(table.rows[r].sup_u_l2 / table.rows[r + 1].sup_u_l2);

    json out;
    out["rows"] = rows;
    out["u_norm_ratios"] = ratios;
    return out;
}

json scenario_relative_cost(Params& P, Ctx& ctx) {
    long n = P.positive_int("n", 64);
    double nu = P.positive("nu", 0.08);
    double horizon = P.positive("horizon", 0.5);
    double dt = P.positive("dt", 5e-4);
    double psi_coeff = P.number("psi_coefficient", 0.3);
    std::vector<double> lambdas = P.vec("lambdas", {4.0, 8.0, 16.0, 32.0, 64.0});

    HamiltonianSpec H = HamiltonianSpec::separable_quadratic(
        0.5, [](double) { return 0.0; }, [](double) { return 0.0; });
    // gentle bump: the limit drift grad(psi(m)) must respect the Peclet bound
    ScalarField1D m0 = bump_density(static_cast<int>(n), P.number("m0_center", 0.5),
                                    P.positive("m0_kappa", 2.0));
    TerminalCondition terminal{ScalarField1D::constant(static_cast<int>(n), 0.0)};
    auto psi = [psi_coeff](double m) { return psi_coeff * m; };

    // limit flow: drift D_pH(x, grad(psi(m)), m)
    struct Cache {
        double t = std::numeric_limits<double>::quiet_NaN();
        Eigen::VectorXd grad_psi;
    };
    auto cache = std::make_shared<Cache>();
    const int ni = static_cast<int>(n);
    DriftFn limit_drift = [&H, psi, cache, ni](double t, int i,
                                               const ScalarField1D& m) -> double {
        if (!(t == cache->t) || cache->grad_psi.size() != ni) {
            ScalarField1D psim;
            psim.n = ni;
            psim.values = Eigen::VectorXd(ni);
            for (int j = 0; j < ni; ++j) psim.values[j] = psi(m.values[j]);
            cache->grad_psi = psim.gradient();
            cache->t = t;
        }
        return H.dp(t, m.node_x(i), cache->grad_psi[i], m.values[i]);
    };
    ScalarTrajectory1D m_abm = solve_fp(limit_drift, nu, m0, horizon, dt,
                                        FluxScheme::Centered, 401);

    Csv csv(ctx.file("relative_cost.csv"), "lambda,w1_max_vs_abm,sup_u_gap,converged");
    json rows = json::array();
    for (double lambda : lambdas) {
        MfgSolution1D sol = solve_mfg_discounted(H, lambda, psi, nu, horizon, m0, terminal, dt);
        double w1 = 0.0, ugap = 0.0;
        for (std::size_t j = 0; j < sol.times.size(); ++j) {
            w1 = std::max(w1, wasserstein1_periodic(sol.m[j], m_abm.fields[j]));
            // u should track psi(m) as lambda grows
            for (int i = 0; i < ni; ++i)
                ugap = std::max(ugap, std::abs(sol.u[j].values[i] - psi(sol.m[j].values[i])));
        }
        csv.cell(lambda).cell(w1).cell(ugap).cell(std::string(sol.converged ? "true" : "false"));
        csv.endrow();
        json r;
        r["lambda"] = lambda;
        r["w1_max_vs_abm"] = w1;
        r["sup_u_gap"] = ugap;
        rows.push_back(r);
    }
    json out;
    out["rows"] = rows;
    return out;
}

json scenario_higher_order(Params& P, Ctx& ctx) {
    long n = P.positive_int("n", 64);
    double nu = P.positive("nu", 0.05);
    double horizon = P.positive("horizon", 0.5);
    double dt = P.positive("dt", 1e-3);
    double lambda = P.positive("lambda_disc", 64.0);

    HamiltonianSpec H = HamiltonianSpec::separable_quadratic(
        0.5, [](double m) { return m; }, [](double) { return 1.0; });
    ScalarField1D m0 = bump_density(static_cast<int>(n), P.number("m0_center", 0.5),
                                    P.positive("m0_kappa", 6.0));
    TerminalCondition terminal{ScalarField1D::constant(static_cast<int>(n), 0.0)};

    MfgSolution1D mfg = solve_mfg_discounted(H, lambda, std::nullopt, nu, horizon, m0,
                                             terminal, dt);
    DriftFn zero_drift = [&H, &m0](double t, int i, const ScalarField1D& m) -> double {
        return H.dp(t, static_cast<double>(i) * m0.h(), 0.0, m.values[i]);
    };
    ScalarTrajectory1D zeroth = solve_fp(zero_drift, nu, m0, horizon, dt,
                                         FluxScheme::Centered, 401);
    ScalarTrajectory1D higher = solve_fp_higher_order(H, lambda, nu, m0, horizon, dt);

    double err_zeroth = (zeroth.fields.back().values - mfg.m.back().values)
                            .cwiseAbs()
                            .maxCoeff();
    double err_higher = (higher.fields.back().values - mfg.m.back().values)
                            .cwiseAbs()
                            .maxCoeff();

    // closed-form effective diffusion for H = p^2/2 - m: nu + m/lambda
    double max_dev = 0.0;
    for (int i = 0; i < static_cast<int>(n); ++i) {
        double m = mfg.m.back().values[i];
        double eff = effective_diffusion(H, lambda, nu, static_cast<double>(i) / n, 0.0, m);
        max_dev = std::max(max_dev, std::abs(eff - (nu + m / lambda)));
    }

    Csv csv(ctx.file("higher_order.csv"), "x,m_mfg,m_zeroth,m_higher");
    for (int i = 0; i < static_cast<int>(n); ++i) {
        csv.cell(static_cast<double>(i) / n).cell(mfg.m.back().values[i]);
        csv.cell(zeroth.fields.back().values[i]).cell(higher.fields.back().values[i]);
        csv.endrow();
    }

    json out;
    out["err_zeroth_vs_mfg"] = err_zeroth;
    out["err_higher_vs_mfg"] = err_higher;
    out["higher_order_improves"] = err_higher <= err_zeroth;
    out["effective_diffusion_max_deviation"] = max_dev;
    out["picard_converged"] = mfg.converged;
    return out;
}

} // namespace

// ----------------------------------------------------------------- dispatch

const std::vector<std::pair<std::string, std::string>>& scenario_catalog() {
    static const std::vector<std::pair<std::string, std::string>> catalog = {
        {"master-noiseless", "master equation without noise on a 2D box"},
        {"master-jump-deterministic", "single deterministic population jump at t1"},
        {"master-poisson-common", "common Poisson jump noise (relaxation term)"},
        {"master-poisson-iid", "i.i.d. Poisson jumps (drift + zero-order terms)"},
        {"master-mixture", "finite atomic mixture of affine jump maps"},
        {"asymptotic-limit", "small-jump limit vs the first-order operator"},
        {"characteristics-compare", "characteristic ODE vs grid solution gaps"},
        {"mc-value", "Monte Carlo value estimate vs the grid solution"},
        {"abm-path", "forward agent-based jump flow sample path"},
        {"monotonicity-report", "pairing-based monotonicity verification"},
        {"lipschitz-report", "Lipschitz bounds: measured vs certified"},
        {"conserved-momentum", "average-control conservation check"},
        {"strong-coupling-roots", "mean-control fixed points by root scan"},
        {"uniqueness-threshold", "uniqueness threshold (1+cT)/(cT)"},
        {"mfg-lambda-sweep", "vanishing-anticipation sweep toward the forward model"},
        {"relative-cost", "relative running cost lambda(u - psi(m)) sweep"},
        {"higher-order-fp", "first-order-in-1/lambda Fokker-Planck correction"},
    };
    return catalog;
}

namespace {

json run_dispatch(const std::string& name, Params& P, Ctx& ctx) {
    if (name == "master-noiseless" || name == "master-jump-deterministic" ||
        name == "master-poisson-common" || name == "master-poisson-iid" ||
        name == "master-mixture")
        return scenario_master(name, P, ctx);
    if (name == "asymptotic-limit") return scenario_asymptotic(P, ctx);
    if (name == "characteristics-compare") return scenario_characteristics(P, ctx);
    if (name == "mc-value") return scenario_mc_value(P, ctx);
    if (name == "abm-path") return scenario_abm(P, ctx);
    if (name == "monotonicity-report") return scenario_monotonicity(P, ctx);
    if (name == "lipschitz-report") return scenario_lipschitz(P, ctx);
    if (name == "conserved-momentum") return scenario_momentum(P, ctx);
    if (name == "strong-coupling-roots") return scenario_strong_coupling(P, ctx);
    if (name == "uniqueness-threshold") return scenario_threshold(P, ctx);
    if (name == "mfg-lambda-sweep") return scenario_lambda_sweep(P, ctx);
    if (name == "relative-cost") return scenario_relative_cost(P, ctx);
    if (name == "higher-order-fp") return scenario_higher_order(P, ctx);

    std::string msg = "unknown scenario '" + name + "'; valid names:";
    for (const auto& [n, desc] : scenario_catalog()) msg += "\n  " + n + " - " + desc;
    throw ConfigError(msg);
}

void write_summary(const fs::path& out_dir, const json& summary) {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    out << summary.dump(2) << "\n";
}

} // namespace

int run_scenario(const json& config, const RunOverrides& overrides) {
    json summary;
    fs::path out_dir = ".";
    try {
        if (!config.is_object()) throw ConfigError("config must be a JSON object");
        if (!config.contains("scenario") || !config.at("scenario").is_string())
            throw ConfigError("config needs a string 'scenario' field");
        std::string name = config.at("scenario").get<std::string>();

        Ctx ctx;
        ctx.seed = overrides.seed.value_or(
            config.contains("seed") ? config.at("seed").get<std::uint64_t>() : 1);
        std::string dir = overrides.out_dir.value_or(
            config.contains("out_dir") ? config.at("out_dir").get<std::string>() : ".");
        out_dir = dir;
        int threads = 1;
        if (const char* env = std::getenv("MFG_LAB_THREADS")) threads = std::atoi(env);
        ctx.threads = std::max(1, overrides.threads.value_or(threads));
        ctx.out_dir = out_dir;
        fs::create_directories(out_dir);

        Params P(config);
        summary["scenario"] = name;
        summary["seed"] = ctx.seed;
        summary["threads"] = ctx.threads;

        json result = run_dispatch(name, P, ctx);
        P.finish();

        summary.update(P.echo());
        summary["results"] = result;
        summary["outputs"] = ctx.outputs;
        summary["failed"] = false;
        write_summary(out_dir, summary);
        return 0;
    } catch (const ConfigError& e) {
        summary["failed"] = true;
        summary["error"] = e.what();
        std::error_code ec;
        if (fs::exists(out_dir, ec)) write_summary(out_dir, summary);
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        summary["failed"] = true;
        summary["error"] = e.what();
        std::error_code ec;
        if (fs::exists(out_dir, ec)) write_summary(out_dir, summary);
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    }
}

int run_scenario_file(const std::string& config_path, const RunOverrides& overrides) {
    std::ifstream in(config_path);
    if (!in) {
        std::fprintf(stderr, "config error: cannot open %s\n", config_path.c_str());
        return 2;
    }
    json config;
    try {
        in >> config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    return run_scenario(config, overrides);
}

} // namespace mfg
