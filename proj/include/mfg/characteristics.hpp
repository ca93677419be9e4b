#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mfg/coupling.hpp"
#include "mfg/master_eq.hpp"

namespace mfg {

/// One characteristic trajectory (Y(s), V(s)); jump times are recorded with
/// both sides, so `times` may contain duplicated entries at jumps.
struct CharPath {
    std::vector<double> times;
    std::vector<Vec> Y;
    std::vector<Vec> V;
    std::vector<double> jump_times;
    std::optional<std::uint64_t> seed;

    const Vec& terminal_value() const { return V.back(); }
    std::size_t jump_count() const { return jump_times.size(); }
};

struct McEstimate {
    Vec mean;
    Vec stderr_;
    int n_paths = 0;
    std::uint64_t seed = 0;
    // jump-count statistics over the same path ensemble
    double mean_jumps = 0.0;
    double stderr_jumps = 0.0;
};

/// Joint forward integration of the deterministic characteristic system
///   dY/ds = F(Y,V),  dV/ds = G(Y,V),  Y(0)=x0, V(0)=U0(x0)
/// with classical RK4 (global error O(dt^4) for smooth F, G).
CharPath solve_fb_characteristics(const Vec& x0,
                                  const std::function<Vec(const Vec&)>& U0_eval,
                                  const Coupling& coupling, double t_f, double dt);

struct CharCompareEntry {
    Vec x0;
    double max_gap = 0.0;
    bool left_box = false;
};

struct CharCompareReport {
    std::vector<CharCompareEntry> entries;
    double max_gap = 0.0;
};

/// Checks U(t, Y(t)) = V(t) for a noiseless, undiscounted grid solution:
/// integrates the characteristic from each sample point and reports the sup
/// over output times of |interpolated grid value - V|. Paths leaving the box
/// are truncated and flagged.
CharCompareReport compare_characteristics_to_grid(const Trajectory& traj,
                                                  const Coupling& coupling,
                                                  const std::vector<Vec>& sample_points,
                                                  double dt);

/// Stochastic characteristic of the discounted common-noise master equation:
/// jump times are partial sums of i.i.d. Exp(jump_rate); Y is pinned at the
/// final time (Y_t = x0) and integrated backward through jumps
/// (Y_{ti-} = S^{-1}(Y_{ti+} - e)), then V runs forward from V_0 = U0(Y_0)
/// with dV/ds = -discount*V + G(Y_s, U(s,Y_s)) between jumps and
/// V_{ti+} = S^T V_{ti-}. The grid solution enters through `traj`, which must
/// solve the same equation with CommonPoisson(jump_rate, J) and `discount`.
/// Requires invertible S.
CharPath simulate_jump_characteristics(const Vec& x0, double t, const Trajectory& traj,
                                       const Coupling& coupling, const AffineJump& J,
                                       double jump_rate, double discount, double dt,
                                       std::uint64_t seed);

/// Sample mean and componentwise standard error of V_t over n_paths
/// independent paths with seeds derived as derive_seed(seed, i); the result
/// is identical regardless of the number of worker threads.
McEstimate estimate_value_mc(const Vec& x0, double t, const Trajectory& traj,
                             const Coupling& coupling, const AffineJump& J, double jump_rate,
                             double discount, double dt, int n_paths, std::uint64_t seed,
                             int threads = 1);

/// Forward agent-based jump flow: dY = F(Y,0) ds between Poisson(rate) jump
/// times, Y_{ti+} = T(Y_{ti-}), from Y_0 = x0. The V channel is unused.
CharPath simulate_abm(const Vec& x0, const Coupling& coupling, const AffineJump& J,
                      double rate, double t_f, double dt, std::uint64_t seed);

/// 2-norm condition number of S (reported when building jump simulations).
double condition_number(const Mat& S);

} // namespace mfg
