#include "adabatch/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

#include "adabatch/experiment.hpp"

namespace adabatch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

Vector randomVector(int d, RngStream& rng, double lo, double hi) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = lo + (hi - lo) * rng.uniform();
    return v;
}

// Nonzero vector bounded away from the degenerate-gradient floor.
Vector randomGradient(int d, RngStream& rng) {
    for (;;) {
        Vector g = randomVector(d, rng, -2.0, 2.0);
        if (g.norm() > 1e-3) return g;
    }
}

// Random lower-triangular factor; LL^T is PSD with positive diagonal.
struct LowerTri {
    int d;
    std::array<double, kMaxDim * kMaxDim> a{};

    Vector apply(const Vector& z) const {
        Vector out(d);
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += a[i * d + j] * z[j];
            out[i] = s;
        }
        return out;
    }
};

LowerTri randomFactor(int d, RngStream& rng) {
    LowerTri l;
    l.d = d;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) l.a[i * d + j] = -1.0 + 2.0 * rng.uniform();
        l.a[i * d + i] = 0.5 + rng.uniform();
    }
    return l;
}

SymMatrix psdFromFactor(const LowerTri& l) {
    SymMatrix m(l.d);
    for (int i = 0; i < l.d; ++i)
        for (int j = i; j < l.d; ++j) {
            double s = 0.0;
            for (int k = 0; k <= std::min(i, j); ++k) s += l.a[i * l.d + k] * l.a[j * l.d + k];
            m.set(i, j, s);
        }
    return m;
}

SymMatrix randomPsd(int d, RngStream& rng) { return psdFromFactor(randomFactor(d, rng)); }

struct SampleStats {
    double mean = 0.0;
    double sd = 0.0;
};

SampleStats meanSd(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= (n - 1.0);
    return {m, std::sqrt(v)};
}

// ---------------------------------------------------------------------------
// Check 1: pointwise Pythagorean split plus the expectation identity
// E||u - g||^2 = V[u . e] + E||u - (u . e) e||^2 under u ~ N(g, Sigma).
// ---------------------------------------------------------------------------
CheckResult check1(const VerifyOptions& opts) {
    CheckResult r{1, "error-decomposition-identity", true, "", 0};
    const auto t0 = Clock::now();
    RngStream rng(opts.baseSeed, 101);

    double worstPointwise = 0.0;
    for (int d : {2, 3, 8}) {
        for (int i = 0; i < 10000; ++i) {
            const Vector g = randomGradient(d, rng);
            const Vector u = randomVector(d, rng, -3.0, 3.0);
            const ErrorSplit split = errorSplit(u, g);
            const double lhs = (u - g).normSq();
            const double rhs = split.parallel.normSq() + split.orthogonal.normSq();
            const double rel = std::abs(lhs - rhs) / std::max(1.0, lhs);
            worstPointwise = std::max(worstPointwise, rel);
        }
    }
    if (worstPointwise > 1e-10) {
        r.pass = false;
        r.detail = "pointwise split off by " + fmt(worstPointwise);
        r.seconds = seconds(t0);
        return r;
    }

    double worstZ = 0.0;
    const int n = 100000;
    for (int d : {2, 3, 8}) {
        const Vector g = randomGradient(d, rng);
        const Vector e = unitDirection(g);
        const LowerTri l = randomFactor(d, rng);
        std::vector<double> errSq(n), along(n), across(n);
        Vector z(d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) z[j] = rng.normal();
            const Vector u = g + l.apply(z);
            errSq[i] = (u - g).normSq();
            along[i] = u.dot(e);
            Vector perp = u;
            perp.addScaled(e, -along[i]);
            across[i] = perp.normSq();
        }
        const SampleStats dStats = meanSd(errSq);
        const SampleStats sStats = meanSd(along);
        const SampleStats oStats = meanSd(across);
        const double lhs = dStats.mean;
        const double rhs = sStats.sd * sStats.sd + oStats.mean;
        const double se = dStats.sd / std::sqrt(static_cast<double>(n));
        const double zScore = std::abs(lhs - rhs) / se;
        worstZ = std::max(worstZ, zScore);
    }
    r.pass = worstZ <= 3.0;
    r.detail = "pointwise rel err " + fmt(worstPointwise) + ", expectation |z| " + fmt(worstZ) +
               " (limit 3)";
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 2: Sigma : P_nabla + Sigma : P_perp == trace(Sigma), with the
// projectors formed explicitly and contracted by the double sum.
// ---------------------------------------------------------------------------
CheckResult check2(const VerifyOptions& opts) {
    CheckResult r{2, "covariance-decomposition", true, "", 0};
    const auto t0 = Clock::now();
    RngStream rng(opts.baseSeed, 102);

    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const int d = 2 + static_cast<int>(rng.uniform() * 7);  // 2..8
        const SymMatrix sigma = randomPsd(d, rng);
        const Vector g = randomGradient(d, rng);
        const ProjectorPair p = projectors(g);
        const double sum = contract(sigma, p.pNabla) + contract(sigma, p.pPerp);
        const double tr = sigma.trace();
        worst = std::max(worst, std::abs(sum - tr) / std::max(1.0, std::abs(tr)));
    }
    r.pass = worst <= 1e-12;
    r.detail = "worst relative defect " + fmt(worst) + " (limit 1e-12)";
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 3: under the optimal split the pre-ceiling inner and orth sample
// sizes equal the norm-test sample size, and inner+orth passing with
// theta^2 + nu^2 <= epsilon^2 implies the norm test passes.
// ---------------------------------------------------------------------------
CheckResult check3(const VerifyOptions& opts) {
    CheckResult r{3, "optimal-split-equivalence", true, "", 0};
    const auto t0 = Clock::now();
    RngStream rng(opts.baseSeed, 103);

    double worst = 0.0;
    long long counterexamples = 0;
    long long premiseHits = 0;
    for (int i = 0; i < 10000; ++i) {
        const int d = 2 + static_cast<int>(rng.uniform() * 7);
        const SymMatrix sigma = randomPsd(d, rng);
        const Vector g = randomGradient(d, rng);
        const double eps = 0.05 + 5.0 * rng.uniform();

        const Split s = optimalSplit(sigma, g, eps);
        const double bNorm = normTestSampleEstimate(sigma, g, eps);
        const auto [bInner, bOrth] = innerOrthSampleEstimates(sigma, g, s.theta, s.nu);
        worst = std::max(worst, std::abs(bInner - bNorm) / std::max(1.0, bNorm));
        worst = std::max(worst, std::abs(bOrth - bNorm) / std::max(1.0, bNorm));

        // random coupled tolerances with theta^2 + nu^2 <= epsilon^2
        const double mass = rng.uniform();
        const double frac = rng.uniform();
        const double theta = eps * std::sqrt(mass * frac);
        const double nu = eps * std::sqrt(mass * (1.0 - frac));
        const long long b =
            1 + static_cast<long long>(std::exp(rng.uniform() * std::log(1e6)));
        const InnerOrthResult io = innerOrthTestHolds(sigma, g, b, theta, nu);
        if (io.inner && io.orth) {
            ++premiseHits;
            if (!normTestHolds(sigma, g, b, eps)) ++counterexamples;
        }
    }
    r.pass = worst <= 1e-10 && counterexamples == 0 && premiseHits > 100;
    r.detail = "pre-ceiling defect " + fmt(worst) + " (limit 1e-10), " +
               std::to_string(counterexamples) + " implication counterexamples over " +
               std::to_string(premiseHits) + " premise hits";
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 4: linear rate bound. Norm controller in oracle mode on the 3-d
// quadratic, case #3, eta = 2 / ((L + mu)(1 + epsilon^2)): the empirical
// mean of ||xi_k - xi*||^2 over 100 replications stays within 1.5x of
// rho^k ||xi0 - xi*||^2 for k = 0..30.
// ---------------------------------------------------------------------------
CheckResult check4(const VerifyOptions& opts) {
    CheckResult r{4, "linear-rate-bound", true, "", 0};
    const auto t0 = Clock::now();

    const Quadratic3Objective obj;
    const Smoothness s = obj.smoothness();
    const double kappa = s.L / s.mu;
    const double epsSq = 1.0;
    const Vector xi0 = defaultXi0(ObjectiveKind::Quad3);
    const long long reps = 100;
    const long long kMax = 30;

    std::vector<std::vector<double>> distSq(reps);
    parallelFor(reps, resolveThreadCount(opts.threads), [&](long long rep) {
        SgdConfig cfg;
        cfg.controller = ControllerKind::Norm;
        cfg.tolerances = table1Cases()[2];
        cfg.mode = DecisionMode::Oracle;
        cfg.stepSizeOverride = 2.0 / ((s.L + s.mu) * (1.0 + epsSq));
        cfg.maxIterations = kMax + 1;
        cfg.maxGradientEvals = 100'000'000;
        cfg.b0 = 32;
        cfg.seed = opts.baseSeed + static_cast<std::uint64_t>(rep);
        const RunRecord rec = runSgd(obj, cfg, xi0);
        auto& row = distSq[rep];
        row.reserve(rec.iterations.size());
        for (const auto& it : rec.iterations) row.push_back(it.xi.normSq());
    });

    double worstRatio = 0.0;
    long long worstK = -1;
    for (long long k = 0; k <= kMax; ++k) {
        double mean = 0.0;
        for (long long rep = 0; rep < reps; ++rep) {
            if (static_cast<std::size_t>(k) >= distSq[rep].size()) {
                r.pass = false;
                r.detail = "replication ended before K";
                r.seconds = seconds(t0);
                return r;
            }
            mean += distSq[rep][k];
        }
        mean /= static_cast<double>(reps);
        const double bound = rateBound(kappa, epsSq, k) * xi0.normSq();
        const double ratio = mean / bound;
        if (ratio > worstRatio) {
            worstRatio = ratio;
            worstK = k;
        }
    }
    r.pass = worstRatio <= 1.5;
    r.detail = "worst mean/bound ratio " + fmt(worstRatio) + " at k=" + std::to_string(worstK) +
               " (limit 1.5)";
    r.seconds = seconds(t0);
    return r;
}

ExperimentSpec quad3Spec(const VerifyOptions& opts) {
    ExperimentSpec spec;
    spec.objective = ObjectiveKind::Quad3;
    spec.cases = table1Cases();
    spec.controllers = {ControllerKind::Norm, ControllerKind::InnerOrth};
    spec.replications = opts.replications;
    spec.baseSeed = opts.baseSeed;
    spec.budget = 1'000'000;
    spec.b0 = 32;
    spec.mode = DecisionMode::Oracle;
    spec.threads = opts.threads;
    return spec;
}

ExperimentSpec quad2Spec(const VerifyOptions& opts) {
    ExperimentSpec spec = quad3Spec(opts);
    spec.objective = ObjectiveKind::Quad2;
    spec.kappa = 100.0;
    spec.cases = {table1Cases()[0], table1Cases()[1], table1Cases()[2]};
    spec.controllers = {ControllerKind::Norm, ControllerKind::InnerOrth,
                        ControllerKind::InnerOrthOptimalSplit};
    return spec;
}

void writeFixtures(const VerifyOptions& opts, const CurveMap& curves, const std::string& stem,
                   const std::string& title) {
    if (opts.outDir.empty()) return;
    std::filesystem::create_directories(opts.outDir);
    emitCsv(curves, opts.outDir + "/" + stem + ".csv");
    emitSvg(curves, opts.outDir + "/" + stem + ".svg", title);
}

// ---------------------------------------------------------------------------
// Check 5: on the 3-d quadratic the norm and inner/orth bands overlap for
// cases #1-#3 and separate for case #4.
// ---------------------------------------------------------------------------
CheckResult check5(const VerifyOptions& opts, CurveMap& curvesOut) {
    CheckResult r{5, "quad3-band-equivalence", true, "", 0};
    const auto t0 = Clock::now();

    curvesOut = runExperiment(quad3Spec(opts));
    writeFixtures(opts, curvesOut, "quad3_cases", "3-d quadratic: gap vs cost");

    const std::size_t n = curvesOut.begin()->second.costGrid.size();
    std::ostringstream detail;
    for (int c = 1; c <= 3; ++c) {
        const double f = bandIntersectFraction(curvesOut.at({ControllerKind::Norm, c}),
                                               curvesOut.at({ControllerKind::InnerOrth, c}), 0, n);
        detail << "case" << c << " overlap " << fmt(f) << " (need >=0.9); ";
        if (f < 0.9) r.pass = false;
    }
    const double f4 = bandIntersectFraction(curvesOut.at({ControllerKind::Norm, 4}),
                                            curvesOut.at({ControllerKind::InnerOrth, 4}), n / 2, n);
    detail << "case4 tail disjoint " << fmt(1.0 - f4) << " (need >=0.5)";
    if (1.0 - f4 < 0.5) r.pass = false;
    r.detail = detail.str();
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 6: on the 2-d quadratic the fixed splits separate the bands while
// the per-iteration optimal split restores the overlap with the norm test.
// ---------------------------------------------------------------------------
CheckResult check6(const VerifyOptions& opts, CurveMap& curvesOut) {
    CheckResult r{6, "quad2-band-separation", true, "", 0};
    const auto t0 = Clock::now();

    curvesOut = runExperiment(quad2Spec(opts));
    writeFixtures(opts, curvesOut, "quad2_cases", "2-d quadratic: gap vs cost");

    const std::size_t n = curvesOut.begin()->second.costGrid.size();
    std::ostringstream detail;
    for (int c = 1; c <= 3; ++c) {
        const double fixedF =
            bandIntersectFraction(curvesOut.at({ControllerKind::Norm, c}),
                                  curvesOut.at({ControllerKind::InnerOrth, c}), n / 2, n);
        const double splitF = bandIntersectFraction(
            curvesOut.at({ControllerKind::Norm, c}),
            curvesOut.at({ControllerKind::InnerOrthOptimalSplit, c}), 0, n);
        detail << "case" << c << " tail disjoint " << fmt(1.0 - fixedF)
               << " (need >=0.3), split overlap " << fmt(splitF) << " (need >=0.9); ";
        if (1.0 - fixedF < 0.3 || splitF < 0.9) r.pass = false;
    }
    r.detail = detail.str();
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 7: objective oracles. Empirical single-draw covariance within 10
// standard errors entrywise at random points, and the 2-d minimizer solves
// its normal equations to 1e-12.
// ---------------------------------------------------------------------------
CheckResult check7(const VerifyOptions& opts) {
    CheckResult r{7, "objective-oracles", true, "", 0};
    const auto t0 = Clock::now();
    RngStream rng(opts.baseSeed, 107);

    const Quadratic3Objective q3;
    const Quadratic2Objective q2;
    const int n = 100000;

    double worstZ = 0.0;
    std::uint64_t pointStream = 1070;
    const auto checkCovariance = [&](const StochasticObjective& obj, const Vector& xi) {
        const int d = obj.dim();
        std::vector<Vector> draws(n, Vector(d));
        RngStream sampler(opts.baseSeed, pointStream++);
        for (int i = 0; i < n; ++i) obj.sampleGradientInto(xi, sampler, draws[i]);
        Vector mean(d);
        for (const Vector& x : draws) mean += x;
        mean *= 1.0 / n;
        const SymMatrix exact = obj.exactCovariance(xi);
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                double c = 0.0, m2 = 0.0;
                for (const Vector& x : draws) {
                    const double y = (x[i] - mean[i]) * (x[j] - mean[j]);
                    c += y;
                    m2 += y * y;
                }
                c /= (n - 1.0);
                const double varY = std::max(0.0, m2 / n - c * c);
                const double se = std::sqrt(varY / n);
                const double diff = std::abs(c - exact(i, j));
                const double z = diff / std::max(se, 1e-15);
                worstZ = std::max(worstZ, z);
            }
        }
    };

    for (int p = 0; p < 5; ++p) checkCovariance(q3, randomVector(3, rng, -2.0, 2.0));
    for (int p = 0; p < 5; ++p) checkCovariance(q2, randomVector(2, rng, -10.0, 10.0));

    const Vector xiStar = q2.minimizer();
    const double residual = (q2.meanHessian().apply(xiStar) - q2.b()).norm();

    r.pass = worstZ <= 10.0 && residual < 1e-12;
    r.detail = "worst covariance |z| " + fmt(worstZ) + " (limit 10), minimizer residual " +
               fmt(residual) + " (limit 1e-12)";
    r.seconds = seconds(t0);
    return r;
}

// ---------------------------------------------------------------------------
// Check 8: the aggregated CSV is byte-identical when the experiments are
// re-run single-threaded (worker count and scheduling order permuted).
// ---------------------------------------------------------------------------
CheckResult check8(const VerifyOptions& opts, const CurveMap& quad3Curves,
                   const CurveMap& quad2Curves) {
    CheckResult r{8, "determinism", true, "", 0};
    const auto t0 = Clock::now();

    // Re-run with a worker count that differs from the first pass so both the
    // count and the scheduling order are permuted.
    const int firstPass = resolveThreadCount(opts.threads);
    const int rerunThreads = firstPass == 1 ? 4 : 1;
    ExperimentSpec s3 = quad3Spec(opts);
    s3.threads = rerunThreads;
    ExperimentSpec s2 = quad2Spec(opts);
    s2.threads = rerunThreads;

    const bool same3 = curvesToCsv(runExperiment(s3)) == curvesToCsv(quad3Curves);
    const bool same2 = curvesToCsv(runExperiment(s2)) == curvesToCsv(quad2Curves);
    r.pass = same3 && same2;
    r.detail = "threads=" + std::to_string(firstPass) + " vs threads=" +
               std::to_string(rerunThreads) + ": quad3 " + (same3 ? "identical" : "DIFFERS") +
               ", quad2 " + (same2 ? "identical" : "DIFFERS");
    r.seconds = seconds(t0);
    return r;
}

CheckResult guarded(const std::function<CheckResult()>& fn, int id, const char* name) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return {id, name, false, std::string("exception: ") + e.what(), 0.0};
    }
}

}  // namespace

std::vector<CheckResult> runVerificationSuite(const VerifyOptions& opts) {
    std::vector<CheckResult> out;
    CurveMap quad3Curves, quad2Curves;
    out.push_back(guarded([&] { return check1(opts); }, 1, "error-decomposition-identity"));
    out.push_back(guarded([&] { return check2(opts); }, 2, "covariance-decomposition"));
    out.push_back(guarded([&] { return check3(opts); }, 3, "optimal-split-equivalence"));
    out.push_back(guarded([&] { return check4(opts); }, 4, "linear-rate-bound"));
    out.push_back(guarded([&] { return check5(opts, quad3Curves); }, 5, "quad3-band-equivalence"));
    out.push_back(guarded([&] { return check6(opts, quad2Curves); }, 6, "quad2-band-separation"));
    out.push_back(guarded([&] { return check7(opts); }, 7, "objective-oracles"));
    if (quad3Curves.empty() || quad2Curves.empty()) {
        out.push_back({8, "determinism", false, "skipped: experiment checks did not run", 0.0});
    } else {
        out.push_back(
            guarded([&] { return check8(opts, quad3Curves, quad2Curves); }, 8, "determinism"));
    }
    return out;
}

bool reportResults(const std::vector<CheckResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] #%d %s (%.1fs) %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.seconds, r.detail.c_str());
        all = all && r.pass;
    }
    int passed = 0;
    for (const auto& r : results)
        if (r.pass) ++passed;
    std::printf("%d/%zu checks passed\n", passed, results.size());
    return all;
}

}  // namespace adabatch
