#include "adabatch/objectives.hpp"

#include <cmath>

namespace adabatch {

Quadratic3Objective::Quadratic3Objective(double noiseStd)
    : h_({{2.0, 1.0, 1.0}, {1.0, 10.0, 1.0}, {1.0, 1.0, 100.0}}), noiseStd_(noiseStd) {
    if (!(noiseStd_ >= 0.0)) throw Error("noiseStd must be nonnegative");
    const EigExtremes e = eigExtremes(h_);
    smoothness_ = {e.lambdaMax, e.lambdaMin};
}

void Quadratic3Objective::sampleGradientInto(const Vector& xi, RngStream& rng, Vector& out) const {
    requireDim(xi);
    out = h_.apply(xi);
    if (noiseStd_ > 0.0) {
        for (int i = 0; i < 3; ++i) out[i] -= noiseStd_ * rng.normal();
    }
}

Vector Quadratic3Objective::exactGradient(const Vector& xi) const {
    requireDim(xi);
    return h_.apply(xi);
}

double Quadratic3Objective::exactValue(const Vector& xi) const {
    requireDim(xi);
    return 0.5 * h_.quadraticForm(xi);
}

SymMatrix Quadratic3Objective::exactCovariance(const Vector& xi) const {
    requireDim(xi);
    return SymMatrix::scaledIdentity(3, noiseStd_ * noiseStd_);
}

Quadratic2Objective::Quadratic2Objective(double kappa)
    : a_({{2.0 * kappa, 0.5}, {0.5, 1.0}}), b_({1.0, 1.0}) {
    init();
}

Quadratic2Objective::Quadratic2Objective(const SymMatrix& a, const Vector& b) : a_(a), b_(b) {
    if (a_.dim() != 2 || b_.dim() != 2) throw DimensionMismatch("Quadratic2Objective is 2-dimensional");
    init();
}

void Quadratic2Objective::init() {
    meanH_ = 0.5 * (SymMatrix::identity(2) + a_);
    aMinusI_ = a_ - SymMatrix::identity(2);
    const EigExtremes e = eigExtremes(meanH_);
    smoothness_ = {e.lambdaMax, e.lambdaMin};
}

void Quadratic2Objective::sampleGradientInto(const Vector& xi, RngStream& rng, Vector& out) const {
    requireDim(xi);
    const double t = rng.uniform();
    out = xi;
    out.addScaled(aMinusI_.apply(xi), t);
    out -= b_;
}

Vector Quadratic2Objective::exactGradient(const Vector& xi) const {
    requireDim(xi);
    return meanH_.apply(xi) - b_;
}

double Quadratic2Objective::exactValue(const Vector& xi) const {
    requireDim(xi);
    return 0.5 * meanH_.quadraticForm(xi) - b_.dot(xi);
}

SymMatrix Quadratic2Objective::exactCovariance(const Vector& xi) const {
    requireDim(xi);
    SymMatrix cov = SymMatrix::outer(aMinusI_.apply(xi));
    cov *= 1.0 / 12.0;  // Var of U(0,1)
    return cov;
}

Vector Quadratic2Objective::minimizer() const {
    const double det = meanH_(0, 0) * meanH_(1, 1) - meanH_(0, 1) * meanH_(1, 0);
    const double scale = meanH_.frobeniusNorm();
    if (std::abs(det) <= 1e-14 * std::max(1.0, scale * scale)) {
        throw SingularMatrix("E[H] is singular");
    }
    return {(b_[0] * meanH_(1, 1) - meanH_(0, 1) * b_[1]) / det,
            (meanH_(0, 0) * b_[1] - b_[0] * meanH_(1, 0)) / det};
}

}  // namespace adabatch
