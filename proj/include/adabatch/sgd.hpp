#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adabatch/batch_control.hpp"
#include "adabatch/objectives.hpp"

namespace adabatch {

enum class ControllerKind { Norm, InnerOrth, InnerOrthOptimalSplit };

const char* controllerName(ControllerKind c);
ControllerKind parseController(const std::string& name);

struct SgdConfig {
    ControllerKind controller = ControllerKind::Norm;
    ToleranceConfig tolerances = ToleranceConfig::fromEpsilon(1.0);
    DecisionMode mode = DecisionMode::Oracle;
    std::optional<double> stepSizeOverride;  // default: 2 / ((L+mu)(1 + theta^2 + nu^2))
    long long maxIterations = 1'000'000;
    long long maxGradientEvals = 1'000'000;
    long long b0 = 32;  // batch size of iteration 0
    std::uint64_t seed = 0;
    BatchBounds bounds;
};

enum class StopReason { MaxIterations, BudgetExhausted, Converged, ControllerError };

const char* stopReasonName(StopReason r);

/// One iteration's trace entry: the iterate before the update, the batch
/// drawn at it, the running cost in gradient evaluations, and the exact
/// optimality gap / squared gradient norm when oracles are available (NaN
/// otherwise).
struct IterationRow {
    long long k = 0;
    Vector xi;
    long long batchSize = 0;
    long long cumulativeCost = 0;
    double gap = 0.0;
    double gradNormSq = 0.0;
};

struct RunRecord {
    std::vector<IterationRow> iterations;
    StopReason stop = StopReason::MaxIterations;
    std::string stopDetail;
    double stepSize = 0.0;
};

/// Mean of b i.i.d. gradient draws at xi.
Vector batchMean(const StochasticObjective& obj, const Vector& xi, long long b, RngStream& rng);

/// Mean and unbiased sample covariance (divisor b - 1) of b >= 2 draws.
/// Single-pass Welford update for the mean with a running outer-product
/// accumulator; the result is symmetrized on assembly.
GradientBatchStats batchMeanAndCov(const StochasticObjective& obj, const Vector& xi, long long b,
                                   RngStream& rng);

/// Constant-step SGD with adaptive batch sizes.
///
/// Iterates xi_{k+1} = xi_k - eta * mean_k where mean_k averages b_k draws.
/// The decision computed from iteration k's statistics (exact oracles in
/// Oracle mode, the batch mean and sample covariance in Plugin mode) sets
/// b_{k+1}; iteration 0 uses cfg.b0. Stops on the iteration cap, on the
/// gradient-evaluation budget (an iteration whose batch would exceed it never
/// starts), or on a degenerate gradient, which is reported as Converged with
/// the final iterate recorded. Controller errors are recorded as the stop
/// reason, never thrown.
RunRecord runSgd(const StochasticObjective& obj, const SgdConfig& cfg, const Vector& xi0);

}  // namespace adabatch
