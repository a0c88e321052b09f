#include <doctest.h>

#include <cmath>
#include <limits>

#include "adabatch/batch_control.hpp"
#include "adabatch/objectives.hpp"
#include "adabatch/rng.hpp"

using namespace adabatch;

namespace {

Vector randomNonzero(int d, RngStream& rng) {
    for (;;) {
        Vector v(d);
        for (int i = 0; i < d; ++i) v[i] = -2.0 + 4.0 * rng.uniform();
        if (v.norm() > 1e-3) return v;
    }
}

SymMatrix randomPsd(int d, RngStream& rng) {
    double a[kMaxDim * kMaxDim];
    for (int i = 0; i < d * d; ++i) a[i] = -1.0 + 2.0 * rng.uniform();
    SymMatrix m(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += a[i * d + k] * a[j * d + k];
            m.set(i, j, s);
        }
    return m;
}

const BatchBounds kWide{1, 1'000'000'000};

}  // namespace

TEST_SUITE("batch_control") {

TEST_CASE("tolerance coupling") {
    SUBCASE("published triples are accepted") {
        CHECK_NOTHROW(ToleranceConfig::coupled(0.1, 0.05, 0.087));
        CHECK_NOTHROW(ToleranceConfig::coupled(0.5, 0.25, 0.43));
        CHECK_NOTHROW(ToleranceConfig::coupled(1.0, 0.5, 0.87));
        CHECK_NOTHROW(ToleranceConfig::coupled(5.91, 0.9, 5.84));
    }
    SUBCASE("violations are rejected") {
        CHECK_THROWS_AS(ToleranceConfig::coupled(1.0, 0.1, 0.1), InvalidTolerance);
        CHECK_THROWS_AS(ToleranceConfig::coupled(0.0, 0.0, 0.0), InvalidTolerance);
        CHECK_THROWS_AS(ToleranceConfig::coupled(-1.0, 0.5, 0.87), InvalidTolerance);
    }
    SUBCASE("strict construction recomputes nu exactly") {
        const ToleranceConfig c = ToleranceConfig::strictFromEpsilonTheta(0.5, 0.25);
        CHECK(c.thetaSq() + c.nuSq() == doctest::Approx(0.25).epsilon(1e-15));
        CHECK_THROWS_AS(ToleranceConfig::strictFromEpsilonTheta(0.5, 0.6), InvalidTolerance);
    }
    SUBCASE("single-parameter factories couple exactly") {
        const ToleranceConfig e = ToleranceConfig::fromEpsilon(0.7);
        CHECK(e.thetaSq() + e.nuSq() == doctest::Approx(e.epsilonSq()).epsilon(1e-15));
        const ToleranceConfig s = ToleranceConfig::fromSplit(0.3, 0.4);
        CHECK(s.epsilon() == doctest::Approx(0.5));
    }
}

TEST_CASE("norm test boundaries") {
    const SymMatrix sigma = SymMatrix::scaledIdentity(3, 1000.0);
    const Vector g{1.0, 0.0, 0.0};  // ||g||^2 = 1
    CHECK(normTestHolds(sigma, g, 300000, 0.1));
    CHECK(!normTestHolds(sigma, g, 299999, 0.1));
    CHECK(normTestBatchSize(sigma, g, 0.1, kWide) == 300000);

    CHECK(normTestHolds(SymMatrix(3), g, 1, 0.1));  // noiseless
    CHECK(normTestBatchSize(SymMatrix(3), g, 0.1) == 2);  // default bMin
    CHECK(normTestBatchSize(SymMatrix(3), g, 0.1, kWide) == 1);

    const Vector g2{1.0, 1.0};  // ||g||^2 = 2
    CHECK(normTestBatchSize(SymMatrix::identity(2), g2, 1.0, kWide) == 1);

    CHECK_THROWS_AS(normTestHolds(sigma, {0.0, 0.0, 0.0}, 10, 0.1), DegenerateGradient);
}

TEST_CASE("inner/orth tests on an isotropic covariance") {
    const double var = 7.0;
    const SymMatrix sigma = SymMatrix::scaledIdentity(3, var);
    RngStream rng(3, 0);
    const Vector g = unitDirection(randomNonzero(3, rng));  // ||g||^2 = 1

    // Sigma : P_nabla = var, Sigma : P_perp = 2 var for any unit direction.
    const double theta = 0.31, nu = 0.52;
    const auto [bInner, bOrth] = innerOrthBatchSizes(sigma, g, theta, nu, kWide);
    CHECK(bInner == static_cast<long long>(std::ceil(var / (theta * theta))));
    CHECK(bOrth == static_cast<long long>(std::ceil(2.0 * var / (nu * nu))));

    const InnerOrthResult atInner = innerOrthTestHolds(sigma, g, bInner, theta, nu);
    CHECK(atInner.inner);
    const InnerOrthResult below = innerOrthTestHolds(sigma, g, bInner - 1, theta, nu);
    CHECK(!below.inner);
}

TEST_CASE("inner/orth sizes agree with the explicit projector oracle") {
    RngStream rng(23, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform() * 7);
        const SymMatrix sigma = randomPsd(d, rng);
        const Vector g = randomNonzero(d, rng);
        const double theta = 0.05 + rng.uniform();
        const double nu = 0.05 + rng.uniform();

        const ProjectorPair p = projectors(g);
        const double wantInner = contract(sigma, p.pNabla) / (theta * theta * g.normSq());
        const double wantOrth = contract(sigma, p.pPerp) / (nu * nu * g.normSq());
        const auto [gotInner, gotOrth] = innerOrthSampleEstimates(sigma, g, theta, nu);
        CHECK(gotInner == doctest::Approx(wantInner).epsilon(1e-10));
        CHECK(gotOrth == doctest::Approx(wantOrth).epsilon(1e-10));
    }
}

TEST_CASE("rank-1 covariance along the gradient") {
    const Vector g{2.0, -1.0};
    SymMatrix sigma = SymMatrix::outer(g);
    sigma *= 3.0;
    // Sigma : P_perp == 0: orth holds for any b and nu > 0
    const InnerOrthResult r = innerOrthTestHolds(sigma, g, 1, 0.5, 1e-9);
    CHECK(r.orth);
    const auto [bInner, bOrth] = innerOrthBatchSizes(sigma, g, 0.5, 1e-9, kWide);
    CHECK(bOrth == 1);
    // Sigma : P_nabla = 3 ||g||^2, so bInner = 3 / theta^2
    CHECK(bInner == static_cast<long long>(std::ceil(3.0 / 0.25)));

    const Split s = optimalSplit(sigma, g, 0.4);
    CHECK(s.theta == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(s.nu == doctest::Approx(0.0));
}

TEST_CASE("zero tolerance against nonzero contraction") {
    const SymMatrix sigma = SymMatrix::identity(2);
    const Vector g{1.0, 0.0};
    CHECK_THROWS_AS(innerOrthBatchSizes(sigma, g, 0.0, 0.5), ZeroTolerance);
    CHECK_THROWS_AS(innerOrthBatchSizes(sigma, g, 0.5, 0.0), ZeroTolerance);
    // zero contraction with zero tolerance needs no samples
    const SymMatrix alongG = SymMatrix::outer(g);
    const auto [bInner, bOrth] = innerOrthBatchSizes(alongG, g, 0.5, 0.0, kWide);
    CHECK(bOrth == 1);
    CHECK(bInner > 1);
}

TEST_CASE("optimal split") {
    SUBCASE("isotropic in d = 3") {
        const SymMatrix sigma = SymMatrix::scaledIdentity(3, 5.0);
        const Split s = optimalSplit(sigma, {0.3, -0.2, 0.9}, 0.6);
        CHECK(s.theta * s.theta == doctest::Approx(0.36 / 3.0).epsilon(1e-12));
        CHECK(s.nu * s.nu == doctest::Approx(2.0 * 0.36 / 3.0).epsilon(1e-12));
    }
    SUBCASE("zero covariance is undefined") {
        CHECK_THROWS_AS(optimalSplit(SymMatrix(3), {1.0, 0.0, 0.0}, 0.5), ZeroCovariance);
    }
    SUBCASE("split ratio identity and coupling over random inputs") {
        RngStream rng(29, 0);
        for (int trial = 0; trial < 500; ++trial) {
            const int d = 2 + static_cast<int>(rng.uniform() * 7);
            const SymMatrix sigma = randomPsd(d, rng);
            const Vector g = randomNonzero(d, rng);
            const double eps = 0.05 + 3.0 * rng.uniform();
            const Split s = optimalSplit(sigma, g, eps);
            CHECK(s.theta * s.theta + s.nu * s.nu == doctest::Approx(eps * eps).epsilon(1e-12));

            const ProjectorPair p = projectors(g);
            const double cn = contract(sigma, p.pNabla);
            const double cp = contract(sigma, p.pPerp);
            if (cn > 1e-12 && cp > 1e-12) {
                CHECK(s.theta * s.theta / (s.nu * s.nu) ==
                      doctest::Approx(cn / cp).epsilon(1e-8));
            }
        }
    }
    SUBCASE("split is invariant under scaling of gradient and covariance") {
        RngStream rng(31, 0);
        const SymMatrix sigma = randomPsd(4, rng);
        const Vector g = randomNonzero(4, rng);
        const Split base = optimalSplit(sigma, g, 0.8);
        const Split scaledSigma = optimalSplit(17.0 * sigma, g, 0.8);
        const Split scaledGrad = optimalSplit(sigma, 0.03 * g, 0.8);
        CHECK(base.theta == doctest::Approx(scaledSigma.theta).epsilon(1e-12));
        CHECK(base.nu == doctest::Approx(scaledGrad.nu).epsilon(1e-12));
    }
}

TEST_CASE("equivalence of pre-ceiling sizes at the optimal split") {
    RngStream rng(37, 0);
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform() * 7);
        const SymMatrix sigma = randomPsd(d, rng);
        const Vector g = randomNonzero(d, rng);
        const double eps = 0.05 + 3.0 * rng.uniform();
        const Split s = optimalSplit(sigma, g, eps);
        const double bNorm = normTestSampleEstimate(sigma, g, eps);
        const auto [bInner, bOrth] = innerOrthSampleEstimates(sigma, g, s.theta, s.nu);
        CHECK(bInner == doctest::Approx(bNorm).epsilon(1e-10));
        CHECK(bOrth == doctest::Approx(bNorm).epsilon(1e-10));
    }
}

TEST_CASE("implication: inner and orth passing imply the norm test") {
    RngStream rng(41, 0);
    int premiseHits = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform() * 7);
        const SymMatrix sigma = randomPsd(d, rng);
        const Vector g = randomNonzero(d, rng);
        const double eps = 0.05 + 4.0 * rng.uniform();
        const double mass = rng.uniform(), frac = rng.uniform();
        const double theta = eps * std::sqrt(mass * frac);
        const double nu = eps * std::sqrt(mass * (1.0 - frac));
        const long long b = 1 + static_cast<long long>(std::exp(rng.uniform() * std::log(1e5)));
        const InnerOrthResult io = innerOrthTestHolds(sigma, g, b, theta, nu);
        if (io.inner && io.orth) {
            ++premiseHits;
            CHECK(normTestHolds(sigma, g, b, eps));
        }
    }
    CHECK(premiseHits > 50);
}

TEST_CASE("batch sizes are monotone in the tolerances") {
    RngStream rng(43, 0);
    const SymMatrix sigma = randomPsd(3, rng);
    const Vector g = randomNonzero(3, rng);
    double prev = std::numeric_limits<double>::max();
    for (double eps = 0.05; eps < 3.0; eps += 0.05) {
        const double est = normTestSampleEstimate(sigma, g, eps);
        CHECK(est <= prev + 1e-12);
        prev = est;
    }
}

TEST_CASE("batch sizes scale as expected in Sigma and grad") {
    RngStream rng(47, 0);
    const SymMatrix sigma = randomPsd(3, rng);
    const Vector g = randomNonzero(3, rng);
    const double base = normTestSampleEstimate(sigma, g, 0.5);
    CHECK(normTestSampleEstimate(9.0 * sigma, g, 0.5) == doctest::Approx(9.0 * base).epsilon(1e-12));
    CHECK(normTestSampleEstimate(sigma, 2.0 * g, 0.5) == doctest::Approx(base / 4.0).epsilon(1e-12));
}

TEST_CASE("batch decision on the 3-d quadratic, case #3") {
    const Quadratic3Objective obj;
    const Vector xi{1.0, 0.0, 0.0};
    const ToleranceConfig cfg = ToleranceConfig::coupled(1.0, 0.5, 0.87);
    const BatchDecision d = computeBatchDecision(obj.exactCovariance(xi), obj.exactGradient(xi),
                                                 cfg, DecisionMode::Oracle);
    // trace = 3000, ||H xi||^2 = 4 + 1 + 1 = 6, eps = 1 -> ceil(500)
    CHECK(d.bNorm == 500);
    CHECK(d.bInnerOrth == std::max(d.bInner, d.bOrth));
    CHECK(d.mode == DecisionMode::Oracle);
}

TEST_CASE("plug-in decision equals oracle decision on identical inputs") {
    const Quadratic3Objective obj;
    const Vector xi{0.4, -1.0, 0.2};
    const ToleranceConfig cfg = ToleranceConfig::coupled(0.5, 0.25, 0.43);
    GradientBatchStats stats;
    stats.mean = obj.exactGradient(xi);
    stats.sampleCov = obj.exactCovariance(xi);
    stats.batchSize = 64;
    const BatchDecision oracle = computeBatchDecision(obj.exactCovariance(xi),
                                                      obj.exactGradient(xi), cfg,
                                                      DecisionMode::Oracle);
    const BatchDecision plugin = computeBatchDecision(stats, cfg);
    CHECK(oracle.bNorm == plugin.bNorm);
    CHECK(oracle.bInner == plugin.bInner);
    CHECK(oracle.bOrth == plugin.bOrth);
    CHECK(plugin.mode == DecisionMode::Plugin);

    GradientBatchStats tooSmall = stats;
    tooSmall.batchSize = 1;
    CHECK_THROWS_AS(computeBatchDecision(tooSmall, cfg), Error);
}

TEST_CASE("optimal-split decisions equalize the tests") {
    RngStream rng(53, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const SymMatrix sigma = randomPsd(3, rng);
        const Vector g = randomNonzero(3, rng);
        const ToleranceConfig cfg = ToleranceConfig::fromEpsilon(0.3 + rng.uniform());
        const BatchDecision d = computeBatchDecision(sigma, g, cfg, DecisionMode::Oracle,
                                                     SplitPolicy::OptimalEachDecision, kWide);
        CHECK(std::abs(d.bInner - d.bNorm) <= 1);
        CHECK(std::abs(d.bOrth - d.bNorm) <= 1);
        CHECK(d.theta * d.theta + d.nu * d.nu == doctest::Approx(cfg.epsilonSq()).epsilon(1e-10));
        CHECK(!d.isotropicFallback);
    }
}

TEST_CASE("optimal-split decision falls back on zero covariance") {
    const ToleranceConfig cfg = ToleranceConfig::fromEpsilon(0.6);
    const BatchDecision d = computeBatchDecision(SymMatrix(3), {1.0, 0.0, 0.0}, cfg,
                                                 DecisionMode::Oracle,
                                                 SplitPolicy::OptimalEachDecision);
    CHECK(d.isotropicFallback);
    CHECK(d.theta == doctest::Approx(0.6 / std::sqrt(3.0)));
    CHECK(d.bNorm == 2);  // bMin
    CHECK(d.bInnerOrth == 2);
}

TEST_CASE("step size") {
    CHECK(stepSize(1.0, 1.0, ToleranceConfig::strictFromEpsilonTheta(1e-9, 0.0)) ==
          doctest::Approx(1.0));
    CHECK(stepSize(100.0, 1.0, ToleranceConfig::strictFromEpsilonTheta(1.0, 0.5)) ==
          doctest::Approx(1.0 / 101.0).epsilon(1e-14));

    const ToleranceConfig fromEps = ToleranceConfig::fromEpsilon(0.8);
    const ToleranceConfig fromSplit = ToleranceConfig::strictFromEpsilonTheta(0.8, 0.31);
    CHECK(stepSize(10.0, 2.0, fromEps) == doctest::Approx(stepSize(10.0, 2.0, fromSplit)).epsilon(1e-14));

    CHECK_THROWS_AS(stepSize(1.0, 2.0, fromEps), InvalidSmoothness);
    CHECK_THROWS_AS(stepSize(1.0, 0.0, fromEps), InvalidSmoothness);
}

TEST_CASE("rate bound") {
    CHECK(rateBound(50.0, 1.0, 0) == 1.0);
    // perfectly conditioned: rho = eps^2 / (1 + eps^2)
    CHECK(rateBound(1.0, 0.25, 3) == doctest::Approx(std::pow(0.25 / 1.25, 3)));
    // direct substitution for kappa = 50, eps = 1, k = 10
    const double rho = ((49.0 / 51.0) * (49.0 / 51.0) + 1.0) / 2.0;
    CHECK(rateBound(50.0, 1.0, 10) == doctest::Approx(std::pow(rho, 10)).epsilon(1e-14));

    const ToleranceConfig split = ToleranceConfig::strictFromEpsilonTheta(0.7, 0.2);
    CHECK(rateBound(12.0, split, 5) ==
          doctest::Approx(rateBound(12.0, split.thetaSq() + split.nuSq(), 5)).epsilon(1e-12));

    for (double eps : {0.1, 1.0, 5.0})
        for (double kappa : {1.0, 10.0, 1000.0}) CHECK(convergenceRate(kappa, eps * eps) < 1.0);
}

}  // TEST_SUITE
