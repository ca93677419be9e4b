#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "mfg/master_eq.hpp"

namespace mfg {

struct ModulusEstimate {
    double modulus = 0.0; // min over pairs of <V(x)-V(y), x-y>/|x-y|^2
    long pairs_used = 0;
    long pairs_skipped = 0; // coincident pairs
};

/// Sampled monotonicity modulus of a map: a lower estimate of alpha over the
/// pair set. Coincident pairs are skipped and counted.
ModulusEstimate monotonicity_modulus(const std::function<Vec(const Vec&)>& map_eval,
                                     const std::vector<std::pair<Vec, Vec>>& pairs);

struct AllNodePairs {};
struct RandomPairs {
    long count;
    std::uint64_t seed;
};
using PairStrategy = std::variant<AllNodePairs, RandomPairs>;

struct MonotonicityReport {
    std::vector<double> times;
    std::vector<double> min_pairing;
    std::vector<std::pair<long, long>> argmin_pair;
    long pair_count = 0;
    double tol = 0.0;
    bool holds = false; // min_pairing >= -tol at every output time
};

/// Minimum pairing <U(t,x)-U(t,y), x-y>/|x-y|^2 per output time over grid
/// node pairs; the verdict is min >= -tol at all times.
MonotonicityReport verify_propagation(const Trajectory& traj, const PairStrategy& strategy,
                                      double tol);

/// Scheme-error-proportional default: 10 * (h + dt) * diam(box)^2.
double default_monotonicity_tol(const Trajectory& traj);

/// The Lipschitz-bound constant
///   beta = min( alpha / (rate*(|S|^2-1)^+ + lip_G_x + 2 lip_F_x), lip_U0 )
/// (verbatim). The solution is then beta^{-1}-Lipschitz in space, uniformly
/// in time; beta = 0 signals that no bound is claimed. When the denominator
/// vanishes entirely with alpha > 0, the lip_U0 branch applies.
double lipschitz_beta(double alpha, double rate, double s_norm, double lip_G_x, double lip_F_x,
                      double lip_U0);

struct LipschitzBudget {
    double alpha = 0.0;
    double rate = 0.0;
    double s_norm = 0.0;
    double lip_G_x = 0.0, lip_F_x = 0.0;
    double lip_F_u = 0.0, lip_G_u = 0.0;
    double lip_U0 = 0.0;
};

enum class ScheduleCase { GMonotone, FMonotone };

struct BetaGammaSchedule {
    std::vector<double> times;
    std::vector<double> beta;
    std::vector<double> gamma;
    bool valid = false;        // beta(t) > 0 on all of [0, t_f]
    double crossing_time = -1; // first time beta hits 0, when invalid
};

/// Time-dependent bound schedules. G-monotone case is the closed form
///   beta(t) = alpha * exp(-(2 lip_F_x + lip_G_x + (|S|^2-1)^+ rate) t).
/// F-monotone case integrates the coupled (beta, gamma) system with
/// gamma(0) = beta(0) * lip_U0^2.
BetaGammaSchedule beta_gamma_schedule(ScheduleCase which, const LipschitzBudget& constants,
                                      double t_f, double beta0, int steps = 400);

/// Empirical space-Lipschitz constant per output time: max over axis-adjacent
/// node pairs of |U(t,x)-U(t,y)| / |x-y|.
std::vector<double> measured_lipschitz(const Trajectory& traj);

struct ScalarTrajectory {
    std::vector<double> times;
    Grid grid;
    std::vector<Vec> values; // one scalar per node per time
};

struct MaxPrincipleResult {
    bool holds = false;
    double min_value = 0.0;
    std::size_t arg_time = 0;
    long arg_node = 0;
};

/// Positivity-propagation oracle: global minimum over times and nodes,
/// holds iff min >= -tol.
MaxPrincipleResult max_principle_check(const ScalarTrajectory& traj, double tol);

} // namespace mfg
