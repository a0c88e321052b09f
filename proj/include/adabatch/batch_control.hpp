#pragma once

#include <cstdint>
#include <utility>

#include "adabatch/errors.hpp"
#include "adabatch/linalg.hpp"

namespace adabatch {

/// Clamp range for integer batch sizes. The lower bound keeps the plug-in
/// sample covariance computable (needs >= 2 samples); the upper bound caps
/// the cost blow-up as the gradient norm approaches zero.
struct BatchBounds {
    long long bMin = 2;
    long long bMax = 10'000'000;
};

/// Tolerance triple (epsilon, theta, nu) coupled by epsilon^2 = theta^2 + nu^2.
///
/// The coupled() factory accepts rounded triples whose epsilon agrees with
/// sqrt(theta^2 + nu^2) to 1e-2 relative; strict construction recomputes
/// nu = sqrt(epsilon^2 - theta^2) so the coupling holds to machine precision.
class ToleranceConfig {
public:
    /// Relaxed coupling check (1e-2 relative on epsilon).
    static ToleranceConfig coupled(double epsilon, double theta, double nu);
    /// nu recomputed from (epsilon, theta); exact coupling.
    static ToleranceConfig strictFromEpsilonTheta(double epsilon, double theta);
    /// Norm-test-only configuration; theta = nu = epsilon / sqrt(2).
    static ToleranceConfig fromEpsilon(double epsilon);
    /// Inner/orth-only configuration; epsilon = hypot(theta, nu).
    static ToleranceConfig fromSplit(double theta, double nu);

    double epsilon() const { return epsilon_; }
    double theta() const { return theta_; }
    double nu() const { return nu_; }
    double epsilonSq() const { return epsilon_ * epsilon_; }
    double thetaSq() const { return theta_ * theta_; }
    double nuSq() const { return nu_ * nu_; }

private:
    ToleranceConfig(double epsilon, double theta, double nu);

    double epsilon_;
    double theta_;
    double nu_;
};

/// Mean and unbiased sample covariance (divisor b - 1) of one Monte Carlo
/// gradient batch; the plug-in surrogate for (grad F, Sigma).
struct GradientBatchStats {
    Vector mean;
    SymMatrix sampleCov;
    long long batchSize = 0;
};

// ---------------------------------------------------------------------------
// The statistical tests. For a size-b mean of i.i.d. draws with single-draw
// covariance Sigma, the estimator covariance is Sigma / b, so the statistical
// error is E||mean - grad||^2 = (Sigma : 1) / b and its components along /
// across the gradient direction are (Sigma : P_nabla) / b and
// (Sigma : P_perp) / b. Contractions with the rank-1 projectors are computed
// as quadratic forms, Sigma : (e (x) e) = e . (Sigma e); agreement with the
// explicit projector contraction is property-tested.
// ---------------------------------------------------------------------------

/// trace(Sigma) / b <= epsilon^2 ||grad||^2
bool normTestHolds(const SymMatrix& sigma, const Vector& grad, long long b, double epsilon,
                   double floor = kGradFloor);

struct InnerOrthResult {
    bool inner = false;
    bool orth = false;
};

/// inner: (Sigma : P_nabla) / b <= theta^2 ||grad||^2
/// orth:  (Sigma : P_perp)  / b <= nu^2    ||grad||^2
InnerOrthResult innerOrthTestHolds(const SymMatrix& sigma, const Vector& grad, long long b,
                                   double theta, double nu, double floor = kGradFloor);

/// Real-valued sample-size requirement (Sigma : 1) / (epsilon^2 ||grad||^2)
/// before ceiling and clamping.
double normTestSampleEstimate(const SymMatrix& sigma, const Vector& grad, double epsilon,
                              double floor = kGradFloor);

/// Real-valued inner and orth requirements before ceiling and clamping.
/// A zero contraction requires no samples regardless of tolerance; a zero
/// tolerance against a nonzero contraction raises ZeroTolerance.
std::pair<double, double> innerOrthSampleEstimates(const SymMatrix& sigma, const Vector& grad,
                                                   double theta, double nu,
                                                   double floor = kGradFloor);

/// ceil of the norm-test requirement, clamped to [bMin, bMax].
long long normTestBatchSize(const SymMatrix& sigma, const Vector& grad, double epsilon,
                            const BatchBounds& bounds = {}, double floor = kGradFloor);

/// ceil of the inner and orth requirements, each clamped to [bMin, bMax].
std::pair<long long, long long> innerOrthBatchSizes(const SymMatrix& sigma, const Vector& grad,
                                                    double theta, double nu,
                                                    const BatchBounds& bounds = {},
                                                    double floor = kGradFloor);

/// Split of epsilon into (theta, nu) that makes the inner and orth sample
/// sizes equal (and equal to the norm-test size):
///   theta^2 = epsilon^2 (Sigma : P_nabla) / (Sigma : 1)
///   nu^2    = epsilon^2 (Sigma : P_perp)  / (Sigma : 1)
/// Raises ZeroCovariance when trace(Sigma) == 0 (split undefined).
struct Split {
    double theta = 0.0;
    double nu = 0.0;
};

Split optimalSplit(const SymMatrix& sigma, const Vector& grad, double epsilon,
                   double floor = kGradFloor);

enum class DecisionMode { Oracle, Plugin };

enum class SplitPolicy {
    Fixed,               // use the configured (theta, nu)
    OptimalEachDecision  // recompute the split from (Sigma, grad) per call
};

/// All candidate sample sizes for one decision point.
struct BatchDecision {
    long long bNorm = 0;
    long long bInner = 0;
    long long bOrth = 0;
    long long bInnerOrth = 0;  // max(bInner, bOrth)
    DecisionMode mode = DecisionMode::Oracle;
    double theta = 0.0;  // split actually used
    double nu = 0.0;
    bool isotropicFallback = false;  // trace(Sigma) == 0 under OptimalEachDecision
};

/// Oracle-mode entry point: sigma and grad are the objective's exact
/// single-draw covariance and exact gradient at the decision point.
BatchDecision computeBatchDecision(const SymMatrix& sigma, const Vector& grad,
                                   const ToleranceConfig& cfg, DecisionMode mode,
                                   SplitPolicy split = SplitPolicy::Fixed,
                                   const BatchBounds& bounds = {}, double floor = kGradFloor);

/// Plug-in entry point: substitutes the batch mean for grad F and the
/// unbiased sample covariance for Sigma in every formula.
BatchDecision computeBatchDecision(const GradientBatchStats& stats, const ToleranceConfig& cfg,
                                   SplitPolicy split = SplitPolicy::Fixed,
                                   const BatchBounds& bounds = {}, double floor = kGradFloor);

/// Constant step size 2 / ((L + mu)(1 + theta^2 + nu^2)); equals
/// 2 / ((L + mu)(1 + epsilon^2)) whenever the coupling holds exactly.
double stepSize(double L, double mu, const ToleranceConfig& cfg);

/// Per-iteration contraction factor of the expected squared distance to the
/// minimizer: rho = (((kappa-1)/(kappa+1))^2 + epsilonSq) / (1 + epsilonSq).
double convergenceRate(double kappa, double epsilonSq);

/// rho^k
double rateBound(double kappa, double epsilonSq, long long k);
double rateBound(double kappa, const ToleranceConfig& cfg, long long k);

}  // namespace adabatch
