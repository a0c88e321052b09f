#pragma once

#include "adabatch/errors.hpp"
#include "adabatch/linalg.hpp"
#include "adabatch/rng.hpp"

namespace adabatch {

struct Smoothness {
    double L = 0.0;   // gradient Lipschitz constant
    double mu = 0.0;  // strong convexity constant
};

/// A stochastic objective F(xi) = E[f(xi, theta) | xi] observed through
/// single-draw gradient samples. The exact oracles (gradient, value,
/// single-sample covariance, minimizer, smoothness constants) are optional:
/// objectives without them are restricted to plug-in batch control.
///
/// Objectives are immutable; sampleGradient takes the caller's RNG stream.
/// Distinct streams may be used concurrently, a single stream must not.
class StochasticObjective {
public:
    virtual ~StochasticObjective() = default;

    virtual int dim() const = 0;

    /// One draw of grad_xi f(xi, theta), theta ~ pi. Writes into out.
    virtual void sampleGradientInto(const Vector& xi, RngStream& rng, Vector& out) const = 0;

    Vector sampleGradient(const Vector& xi, RngStream& rng) const {
        Vector out(dim());
        sampleGradientInto(xi, rng, out);
        return out;
    }

    virtual bool hasExactOracles() const { return false; }

    virtual Vector exactGradient(const Vector&) const {
        throw OracleUnavailable("exactGradient not provided");
    }
    virtual double exactValue(const Vector&) const {
        throw OracleUnavailable("exactValue not provided");
    }
    /// Covariance of a single gradient draw at xi.
    virtual SymMatrix exactCovariance(const Vector&) const {
        throw OracleUnavailable("exactCovariance not provided");
    }
    virtual Vector minimizer() const {
        throw OracleUnavailable("minimizer not provided");
    }
    virtual Smoothness smoothness() const {
        throw OracleUnavailable("smoothness not provided");
    }

protected:
    void requireDim(const Vector& xi) const {
        if (xi.dim() != dim()) throw DimensionMismatch("design point dimension mismatch");
    }
};

/// F(xi) = E[ 1/2 xi . H xi - theta . xi ] on R^3 with fixed
/// H = [[2,1,1],[1,10,1],[1,1,100]] and theta ~ N(0, noiseStd^2 I).
/// Since E[theta] = 0, F(xi) = 1/2 xi . H xi and the minimizer is the origin.
/// A single gradient draw is H xi - theta, so its covariance is noiseStd^2 I.
class Quadratic3Objective final : public StochasticObjective {
public:
    explicit Quadratic3Objective(double noiseStd = kDefaultNoiseStd);

    static constexpr double kDefaultNoiseStd = 31.6227766016837933;  // sqrt(1000)

    int dim() const override { return 3; }
    void sampleGradientInto(const Vector& xi, RngStream& rng, Vector& out) const override;

    bool hasExactOracles() const override { return true; }
    Vector exactGradient(const Vector& xi) const override;
    double exactValue(const Vector& xi) const override;
    SymMatrix exactCovariance(const Vector& xi) const override;
    Vector minimizer() const override { return Vector(3); }
    Smoothness smoothness() const override { return smoothness_; }

    const SymMatrix& hessian() const { return h_; }
    double noiseStd() const { return noiseStd_; }

private:
    SymMatrix h_;
    double noiseStd_;
    Smoothness smoothness_;
};

/// F(xi) = 1/2 xi . E[H(theta)] xi - b . xi on R^2 where
/// H(theta) = I (1 - theta) + A theta, theta ~ U(0, 1),
/// A = [[2 kappa, 0.5], [0.5, 1]], b = (1, 1) by default. E[H] = (I + A) / 2.
/// A single gradient draw is H(theta) xi - b = xi + theta (A - I) xi - b, so
/// its covariance is Var(theta) w (x) w = (1/12) w (x) w with w = (A - I) xi.
class Quadratic2Objective final : public StochasticObjective {
public:
    explicit Quadratic2Objective(double kappa = 100.0);
    Quadratic2Objective(const SymMatrix& a, const Vector& b);

    int dim() const override { return 2; }
    void sampleGradientInto(const Vector& xi, RngStream& rng, Vector& out) const override;

    bool hasExactOracles() const override { return true; }
    Vector exactGradient(const Vector& xi) const override;
    double exactValue(const Vector& xi) const override;
    SymMatrix exactCovariance(const Vector& xi) const override;
    /// Solves E[H] xi* = b by Cramer's rule. Raises SingularMatrix.
    Vector minimizer() const override;
    Smoothness smoothness() const override { return smoothness_; }

    const SymMatrix& a() const { return a_; }
    const SymMatrix& meanHessian() const { return meanH_; }
    const Vector& b() const { return b_; }

private:
    void init();

    SymMatrix a_;
    Vector b_;
    SymMatrix meanH_;   // (I + A) / 2
    SymMatrix aMinusI_;
    Smoothness smoothness_;
};

}  // namespace adabatch
