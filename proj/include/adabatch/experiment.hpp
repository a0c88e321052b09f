#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "adabatch/sgd.hpp"

namespace adabatch {

enum class ObjectiveKind { Quad3, Quad2 };

const char* objectiveName(ObjectiveKind k);
ObjectiveKind parseObjective(const std::string& name);

/// The four built-in tolerance triples:
///   #1 (0.1, 0.05, 0.087)  #2 (0.5, 0.25, 0.43)
///   #3 (1,   0.5,  0.87)   #4 (5.91, 0.9, 5.84)
/// With strict = true, nu is recomputed from (epsilon, theta) so the coupling
/// holds to machine precision instead of the printed rounding.
std::vector<ToleranceConfig> table1Cases(bool strict = false);

struct ExperimentSpec {
    ObjectiveKind objective = ObjectiveKind::Quad3;
    double kappa = 100.0;  // Quad2 only
    std::vector<ToleranceConfig> cases = table1Cases();
    std::vector<ControllerKind> controllers = {ControllerKind::Norm, ControllerKind::InnerOrth};
    long long replications = 1000;
    Vector xi0;  // empty: per-objective default
    std::uint64_t baseSeed = 0;
    long long budget = 1'000'000;  // maxGradientEvals per run
    long long b0 = 32;
    DecisionMode mode = DecisionMode::Oracle;
    int gridPoints = 200;
    long long maxIterations = 10'000'000;
    int threads = 0;  // 0: ADABATCH_THREADS env, then hardware concurrency
};

Vector defaultXi0(ObjectiveKind k);
std::unique_ptr<StochasticObjective> makeObjective(const ExperimentSpec& spec);

/// Pointwise percentile band of the optimality gap over replications,
/// sampled on the shared cost grid.
struct AggregateCurve {
    std::vector<long long> costGrid;
    std::vector<double> median;
    std::vector<double> lo95;
    std::vector<double> hi95;
    long long replications = 0;
};

struct CellKey {
    ControllerKind controller;
    int caseIndex;  // 1-based

    bool operator<(const CellKey& o) const {
        if (controller != o.controller) return controller < o.controller;
        return caseIndex < o.caseIndex;
    }
};

using CurveMap = std::map<CellKey, AggregateCurve>;

/// Strictly increasing, approximately log-spaced integer grid from b0 to
/// budget (duplicates from rounding removed).
std::vector<long long> logCostGrid(long long b0, long long budget, int points);

/// Gap at each grid cost by last-observation-carried-forward over the run's
/// (cumulativeCost, gap) rows; only rows with cumulativeCost <= grid cost
/// contribute. Grid costs before the first row yield NaN.
std::vector<double> interpolateGapOnGrid(const RunRecord& rec,
                                         const std::vector<long long>& grid);

/// Order-statistic percentile of a sorted sample: element at index
/// max(0, ceil(q * n) - 1).
double percentileSorted(const std::vector<double>& sorted, double q);

/// Runs every (controller, case) cell over `replications` seeds
/// baseSeed + i and aggregates 2.5 / 50 / 97.5 percentile bands on the
/// shared grid. Replications run concurrently (worker count per
/// spec.threads / ADABATCH_THREADS); results are keyed by replication index,
/// so output is independent of worker count and scheduling order. Per-run
/// failures are skipped; a cell throws only if every replication failed.
CurveMap runExperiment(const ExperimentSpec& spec);

/// Fraction of grid indices in [from, to) where the 95% bands of a and b
/// intersect.
double bandIntersectFraction(const AggregateCurve& a, const AggregateCurve& b, std::size_t from,
                             std::size_t to);

/// CSV with header controller,case,cost,gap_lo,gap_med,gap_hi and floats at
/// 17 significant digits; byte-stable for identical input.
std::string curvesToCsv(const CurveMap& curves);
void emitCsv(const CurveMap& curves, const std::string& path);
CurveMap parseCsv(const std::string& path);

/// Log-log gap-versus-cost plot with shaded 95% bands, one color per cell.
std::string curvesToSvg(const CurveMap& curves, const std::string& title);
void emitSvg(const CurveMap& curves, const std::string& path,
             const std::string& title = "optimality gap vs gradient evaluations");

/// Flat key = value configuration (one pair per line, '#' comments).
/// Unknown keys and malformed values raise ConfigError. See README for the
/// schema.
ExperimentSpec parseExperimentConfig(const std::string& text);
ExperimentSpec loadExperimentConfig(const std::string& path);

/// Worker count: explicit > 0 wins, else ADABATCH_THREADS (0 = auto), else
/// hardware concurrency.
int resolveThreadCount(int requested);

/// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the first task
/// exception after joining.
void parallelFor(long long n, int threads, const std::function<void(long long)>& fn);

}  // namespace adabatch
