#include "adabatch/sgd.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace adabatch {

namespace {

long long pickSize(const BatchDecision& d, ControllerKind controller) {
    return controller == ControllerKind::Norm ? d.bNorm : d.bInnerOrth;
}

}  // namespace

const char* controllerName(ControllerKind c) {
    switch (c) {
        case ControllerKind::Norm:
            return "norm";
        case ControllerKind::InnerOrth:
            return "innerOrth";
        case ControllerKind::InnerOrthOptimalSplit:
            return "innerOrthOptimalSplit";
    }
    return "?";
}

ControllerKind parseController(const std::string& name) {
    if (name == "norm") return ControllerKind::Norm;
    if (name == "innerOrth") return ControllerKind::InnerOrth;
    if (name == "innerOrthOptimalSplit") return ControllerKind::InnerOrthOptimalSplit;
    throw ConfigError("unknown controller: " + name);
}

const char* stopReasonName(StopReason r) {
    switch (r) {
        case StopReason::MaxIterations:
            return "maxIterations";
        case StopReason::BudgetExhausted:
            return "budgetExhausted";
        case StopReason::Converged:
            return "converged";
        case StopReason::ControllerError:
            return "controllerError";
    }
    return "?";
}

Vector batchMean(const StochasticObjective& obj, const Vector& xi, long long b, RngStream& rng) {
    if (b < 1) throw Error("batch size must be >= 1");
    const int d = obj.dim();
    Vector sum(d);
    Vector draw(d);
    for (long long i = 0; i < b; ++i) {
        obj.sampleGradientInto(xi, rng, draw);
        sum += draw;
    }
    sum *= 1.0 / static_cast<double>(b);
    return sum;
}

GradientBatchStats batchMeanAndCov(const StochasticObjective& obj, const Vector& xi, long long b,
                                   RngStream& rng) {
    if (b < 2) throw Error("sample covariance needs batch size >= 2");
    const int d = obj.dim();
    Vector mean(d);
    Vector draw(d);
    std::array<double, kMaxDim * kMaxDim> m{};  // sum of (x - mean_new)(x - mean_old)^T
    for (long long n = 1; n <= b; ++n) {
        obj.sampleGradientInto(xi, rng, draw);
        Vector deltaOld = draw - mean;
        mean.addScaled(deltaOld, 1.0 / static_cast<double>(n));
        const Vector deltaNew = draw - mean;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m[i * d + j] += deltaNew[i] * deltaOld[j];
    }
    GradientBatchStats stats;
    stats.mean = mean;
    for (auto& v : m) v /= static_cast<double>(b - 1);
    stats.sampleCov = SymMatrix::fromRowMajor(d, m.data());
    stats.batchSize = b;
    return stats;
}

RunRecord runSgd(const StochasticObjective& obj, const SgdConfig& cfg, const Vector& xi0) {
    if (xi0.dim() != obj.dim()) throw DimensionMismatch("xi0 dimension mismatch");
    if (cfg.maxIterations < 1) throw Error("maxIterations must be >= 1");
    if (cfg.b0 < cfg.bounds.bMin) throw Error("b0 must be >= bMin");
    if (cfg.maxGradientEvals < cfg.b0) throw Error("maxGradientEvals must cover iteration 0");
    const bool oracles = obj.hasExactOracles();
    if (cfg.mode == DecisionMode::Oracle && !oracles)
        throw OracleUnavailable("oracle-mode run on an objective without exact oracles");

    double eta;
    if (cfg.stepSizeOverride) {
        eta = *cfg.stepSizeOverride;
    } else {
        const Smoothness s = obj.smoothness();
        eta = stepSize(s.L, s.mu, cfg.tolerances);
    }

    const double fStar = oracles ? obj.exactValue(obj.minimizer())
                                 : std::numeric_limits<double>::quiet_NaN();

    RunRecord rec;
    rec.stepSize = eta;
    rec.stop = StopReason::MaxIterations;

    RngStream rng(cfg.seed, 0);
    Vector xi = xi0;
    long long b = cfg.b0;
    long long cost = 0;

    const SplitPolicy split = cfg.controller == ControllerKind::InnerOrthOptimalSplit
                                  ? SplitPolicy::OptimalEachDecision
                                  : SplitPolicy::Fixed;

    for (long long k = 0; k < cfg.maxIterations; ++k) {
        if (cost + b > cfg.maxGradientEvals) {
            rec.stop = StopReason::BudgetExhausted;
            break;
        }

        GradientBatchStats stats;
        Vector mean;
        if (cfg.mode == DecisionMode::Plugin) {
            stats = batchMeanAndCov(obj, xi, b, rng);
            mean = stats.mean;
        } else {
            mean = batchMean(obj, xi, b, rng);
        }
        cost += b;

        IterationRow row;
        row.k = k;
        row.xi = xi;
        row.batchSize = b;
        row.cumulativeCost = cost;
        Vector gradExact;
        if (oracles) {
            gradExact = obj.exactGradient(xi);
            row.gap = obj.exactValue(xi) - fStar;
            row.gradNormSq = gradExact.normSq();
        } else {
            row.gap = std::numeric_limits<double>::quiet_NaN();
            row.gradNormSq = std::numeric_limits<double>::quiet_NaN();
        }
        rec.iterations.push_back(row);

        // Decision at xi_k sets the batch size of iteration k + 1.
        const double floor = gradFloor(xi.norm());
        try {
            if (cfg.mode == DecisionMode::Oracle) {
                const SymMatrix sigma = obj.exactCovariance(xi);
                b = pickSize(computeBatchDecision(sigma, gradExact, cfg.tolerances,
                                                  DecisionMode::Oracle, split, cfg.bounds, floor),
                             cfg.controller);
            } else {
                b = pickSize(computeBatchDecision(stats, cfg.tolerances, split, cfg.bounds, floor),
                             cfg.controller);
            }
        } catch (const DegenerateGradient&) {
            rec.stop = StopReason::Converged;
            break;
        } catch (const Error& e) {
            rec.stop = StopReason::ControllerError;
            rec.stopDetail = e.what();
            break;
        }

        xi.addScaled(mean, -eta);
    }
    return rec;
}

}  // namespace adabatch
