#include "mfg/jumps.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

double power_iteration_norm(const Mat& S, int max_iter, double tol) {
    const int d = static_cast<int>(S.cols());
    Mat StS = S.transpose() * S;
    Vec v = Vec::Ones(d);
    for (int i = 0; i < d; ++i) v[i] += 0.01 * (i + 1); // break symmetry
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec w = StS * v;
        double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        double next = w.dot(StS * w);
        if (std::abs(next - lambda) <= tol * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
        v = w;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

AffineJump AffineJump::make(const Mat& S, const Vec& e) {
    if (S.rows() != S.cols())
        throw std::invalid_argument("AffineJump: S must be square");
    if (e.size() != S.rows())
        throw std::invalid_argument("AffineJump: e dimension does not match S");
    AffineJump j;
    j.S = S;
    j.e = e;
    j.op_norm_S = power_iteration_norm(S);
    return j;
}

AffineJump AffineJump::identity(int d) {
    return make(Mat::Identity(d, d), Vec::Zero(d));
}

NoiseSpec validate_noise(NoiseSpec spec) {
    struct Visitor {
        void operator()(const NoiseNone&) const {}
        void operator()(const DeterministicJump& d) const {
            if (!(d.t1 > 0.0))
                throw std::invalid_argument("DeterministicJump: t1 must be positive");
        }
        void operator()(const CommonPoisson& c) const {
            if (c.rate < 0.0)
                throw std::invalid_argument("CommonPoisson: rate must be >= 0");
        }
        void operator()(const IidPoisson& c) const {
            if (c.rate < 0.0)
                throw std::invalid_argument("IidPoisson: rate must be >= 0");
        }
        void operator()(const Mixture& m) const {
            if (m.rate < 0.0)
                throw std::invalid_argument("Mixture: rate must be >= 0");
            if (m.atoms.empty())
                throw std::invalid_argument("Mixture: needs at least one atom");
            double total = 0.0;
            for (const auto& a : m.atoms) {
                if (a.weight < 0.0)
                    throw std::invalid_argument("Mixture: negative weight");
                total += a.weight;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw std::invalid_argument("Mixture: weights must sum to 1");
        }
    };
    std::visit(Visitor{}, spec);
    return spec;
}

} // namespace mfg
