#include "adabatch/batch_control.hpp"

#include <algorithm>
#include <cmath>

namespace adabatch {

namespace {

// (Sigma : P_nabla, Sigma : P_perp) via the quadratic form of the unit
// gradient direction.
struct DirectionalContractions {
    double parallel;
    double perp;
    double total;
    double gradNormSq;
};

DirectionalContractions directionalContractions(const SymMatrix& sigma, const Vector& grad,
                                                double floor) {
    if (sigma.dim() != grad.dim()) throw DimensionMismatch("covariance/gradient dimensions differ");
    const double gns = grad.normSq();
    if (!(std::sqrt(gns) > floor)) throw DegenerateGradient("gradient norm at or below floor");
    const double total = sigma.trace();
    const double parallel = sigma.quadraticForm(grad) / gns;
    // Clamp tiny negative round-off; Sigma is PSD so both parts are >= 0.
    const double perp = std::max(0.0, total - parallel);
    return {std::max(0.0, parallel), perp, total, gns};
}

double requirement(double contraction, double toleranceSq, double gradNormSq, const char* name) {
    if (contraction <= 0.0) return 0.0;
    if (!(toleranceSq > 0.0)) throw ZeroTolerance(name);
    return contraction / (toleranceSq * gradNormSq);
}

long long ceilClamp(double estimate, const BatchBounds& bounds) {
    if (!(estimate > 0.0)) return bounds.bMin;
    if (estimate >= static_cast<double>(bounds.bMax)) return bounds.bMax;
    const long long b = static_cast<long long>(std::ceil(estimate));
    return std::clamp(b, bounds.bMin, bounds.bMax);
}

}  // namespace

ToleranceConfig::ToleranceConfig(double epsilon, double theta, double nu)
    : epsilon_(epsilon), theta_(theta), nu_(nu) {
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_))
        throw InvalidTolerance("epsilon must be positive and finite");
    if (!(theta_ >= 0.0) || !(nu_ >= 0.0) || !std::isfinite(theta_) || !std::isfinite(nu_))
        throw InvalidTolerance("theta and nu must be nonnegative and finite");
}

ToleranceConfig ToleranceConfig::coupled(double epsilon, double theta, double nu) {
    ToleranceConfig cfg(epsilon, theta, nu);
    // Triples rounded to two or three digits are accepted when epsilon
    // matches sqrt(theta^2 + nu^2) to 1e-2 relative.
    const double implied = std::hypot(theta, nu);
    if (std::abs(implied - epsilon) > 1e-2 * epsilon)
        throw InvalidTolerance("epsilon^2 != theta^2 + nu^2 beyond the rounding allowance");
    return cfg;
}

ToleranceConfig ToleranceConfig::strictFromEpsilonTheta(double epsilon, double theta) {
    if (!(theta <= epsilon)) throw InvalidTolerance("theta must not exceed epsilon");
    const double nu = std::sqrt(std::max(0.0, epsilon * epsilon - theta * theta));
    return ToleranceConfig(epsilon, theta, nu);
}

ToleranceConfig ToleranceConfig::fromEpsilon(double epsilon) {
    const double half = epsilon / std::sqrt(2.0);
    return ToleranceConfig(epsilon, half, half);
}

ToleranceConfig ToleranceConfig::fromSplit(double theta, double nu) {
    return ToleranceConfig(std::hypot(theta, nu), theta, nu);
}

bool normTestHolds(const SymMatrix& sigma, const Vector& grad, long long b, double epsilon,
                   double floor) {
    const DirectionalContractions c = directionalContractions(sigma, grad, floor);
    if (b < 1) throw Error("batch size must be >= 1");
    return c.total / static_cast<double>(b) <= epsilon * epsilon * c.gradNormSq;
}

InnerOrthResult innerOrthTestHolds(const SymMatrix& sigma, const Vector& grad, long long b,
                                   double theta, double nu, double floor) {
    const DirectionalContractions c = directionalContractions(sigma, grad, floor);
    if (b < 1) throw Error("batch size must be >= 1");
    const double bReal = static_cast<double>(b);
    return {c.parallel / bReal <= theta * theta * c.gradNormSq,
            c.perp / bReal <= nu * nu * c.gradNormSq};
}

double normTestSampleEstimate(const SymMatrix& sigma, const Vector& grad, double epsilon,
                              double floor) {
    const DirectionalContractions c = directionalContractions(sigma, grad, floor);
    return requirement(c.total, epsilon * epsilon, c.gradNormSq, "epsilon");
}

std::pair<double, double> innerOrthSampleEstimates(const SymMatrix& sigma, const Vector& grad,
                                                   double theta, double nu, double floor) {
    const DirectionalContractions c = directionalContractions(sigma, grad, floor);
    return {requirement(c.parallel, theta * theta, c.gradNormSq, "theta"),
            requirement(c.perp, nu * nu, c.gradNormSq, "nu")};
}

long long normTestBatchSize(const SymMatrix& sigma, const Vector& grad, double epsilon,
                            const BatchBounds& bounds, double floor) {
    return ceilClamp(normTestSampleEstimate(sigma, grad, epsilon, floor), bounds);
}

std::pair<long long, long long> innerOrthBatchSizes(const SymMatrix& sigma, const Vector& grad,
                                                    double theta, double nu,
                                                    const BatchBounds& bounds, double floor) {
    const auto [inner, orth] = innerOrthSampleEstimates(sigma, grad, theta, nu, floor);
    return {ceilClamp(inner, bounds), ceilClamp(orth, bounds)};
}

Split optimalSplit(const SymMatrix& sigma, const Vector& grad, double epsilon, double floor) {
    const DirectionalContractions c = directionalContractions(sigma, grad, floor);
    if (!(c.total > 0.0)) throw ZeroCovariance("trace(Sigma) == 0: split undefined");
    const double epsSq = epsilon * epsilon;
    return {std::sqrt(epsSq * c.parallel / c.total), std::sqrt(epsSq * c.perp / c.total)};
}

BatchDecision computeBatchDecision(const SymMatrix& sigma, const Vector& grad,
                                   const ToleranceConfig& cfg, DecisionMode mode,
                                   SplitPolicy split, const BatchBounds& bounds, double floor) {
    BatchDecision d;
    d.mode = mode;
    d.theta = cfg.theta();
    d.nu = cfg.nu();
    if (split == SplitPolicy::OptimalEachDecision) {
        try {
            const Split s = optimalSplit(sigma, grad, cfg.epsilon(), floor);
            d.theta = s.theta;
            d.nu = s.nu;
        } catch (const ZeroCovariance&) {
            // Deterministic fallback: the isotropic split theta^2 = eps^2 / d.
            const double dims = static_cast<double>(grad.dim());
            d.theta = cfg.epsilon() / std::sqrt(dims);
            d.nu = cfg.epsilon() * std::sqrt((dims - 1.0) / dims);
            d.isotropicFallback = true;
        }
    }
    d.bNorm = normTestBatchSize(sigma, grad, cfg.epsilon(), bounds, floor);
    const auto [bInner, bOrth] = innerOrthBatchSizes(sigma, grad, d.theta, d.nu, bounds, floor);
    d.bInner = bInner;
    d.bOrth = bOrth;
    d.bInnerOrth = std::max(bInner, bOrth);
    return d;
}

BatchDecision computeBatchDecision(const GradientBatchStats& stats, const ToleranceConfig& cfg,
                                   SplitPolicy split, const BatchBounds& bounds, double floor) {
    if (stats.batchSize < 2) throw Error("plug-in decisions need batchSize >= 2");
    return computeBatchDecision(stats.sampleCov, stats.mean, cfg, DecisionMode::Plugin, split,
                                bounds, floor);
}

double stepSize(double L, double mu, const ToleranceConfig& cfg) {
    if (!(mu > 0.0) || !(L >= mu) || !std::isfinite(L))
        throw InvalidSmoothness("need L >= mu > 0");
    return 2.0 / ((L + mu) * (1.0 + cfg.thetaSq() + cfg.nuSq()));
}

double convergenceRate(double kappa, double epsilonSq) {
    const double contraction = (kappa - 1.0) / (kappa + 1.0);
    return (contraction * contraction + epsilonSq) / (1.0 + epsilonSq);
}

double rateBound(double kappa, double epsilonSq, long long k) {
    return std::pow(convergenceRate(kappa, epsilonSq), static_cast<double>(k));
}

double rateBound(double kappa, const ToleranceConfig& cfg, long long k) {
    return rateBound(kappa, cfg.epsilonSq(), k);
}

}  // namespace adabatch
