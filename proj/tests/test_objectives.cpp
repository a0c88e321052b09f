#include <doctest.h>

#include <cmath>
#include <vector>

#include "adabatch/objectives.hpp"

using namespace adabatch;

namespace {

Vector randomVec(int d, RngStream& rng, double lo, double hi) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = lo + (hi - lo) * rng.uniform();
    return v;
}

// Oracle: central finite difference of exactValue.
Vector finiteDifferenceGradient(const StochasticObjective& obj, const Vector& xi, double h) {
    Vector g(obj.dim());
    for (int i = 0; i < obj.dim(); ++i) {
        Vector hi = xi, lo = xi;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (obj.exactValue(hi) - obj.exactValue(lo)) / (2.0 * h);
    }
    return g;
}

struct Empirical {
    Vector mean;
    SymMatrix cov;
    SymMatrix covSe;  // entrywise standard error of the covariance estimate
    Vector meanSe;
};

Empirical sampleMoments(const StochasticObjective& obj, const Vector& xi, int n, RngStream& rng) {
    const int d = obj.dim();
    std::vector<Vector> draws(n, Vector(d));
    for (int i = 0; i < n; ++i) obj.sampleGradientInto(xi, rng, draws[i]);
    Empirical e{Vector(d), SymMatrix(d), SymMatrix(d), Vector(d)};
    for (const Vector& x : draws) e.mean += x;
    e.mean *= 1.0 / n;
    for (int i = 0; i < d; ++i) {
        double varI = 0.0;
        for (const Vector& x : draws) varI += (x[i] - e.mean[i]) * (x[i] - e.mean[i]);
        e.meanSe[i] = std::sqrt(varI / (n - 1.0) / n);
        for (int j = i; j < d; ++j) {
            double c = 0.0, m2 = 0.0;
            for (const Vector& x : draws) {
                const double y = (x[i] - e.mean[i]) * (x[j] - e.mean[j]);
                c += y;
                m2 += y * y;
            }
            c /= (n - 1.0);
            e.cov.set(i, j, c);
            e.covSe.set(i, j, std::sqrt(std::max(0.0, m2 / n - c * c) / n));
        }
    }
    return e;
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("quad3 exact oracles") {
    const Quadratic3Objective obj;
    CHECK(obj.dim() == 3);
    CHECK(obj.hasExactOracles());

    const Vector g = obj.exactGradient({1.0, 0.0, 0.0});
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 1.0);
    CHECK(g[2] == 1.0);

    CHECK(obj.exactValue({0.0, 0.0, 0.0}) == 0.0);
    CHECK(obj.exactValue({1.0, 0.0, 0.0}) == doctest::Approx(1.0));  // 0.5 * H_00

    const SymMatrix cov = obj.exactCovariance({3.0, -1.0, 2.0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(cov(i, j) == doctest::Approx(i == j ? 1000.0 : 0.0));

    CHECK(obj.minimizer().norm() == 0.0);
    CHECK(obj.exactGradient(obj.minimizer()).norm() == 0.0);

    CHECK_THROWS_AS(obj.exactGradient({1.0, 2.0}), DimensionMismatch);
}

TEST_CASE("quad3 smoothness constants solve the characteristic polynomial") {
    const Quadratic3Objective obj;
    const Smoothness s = obj.smoothness();
    CHECK(s.mu <= s.L);
    CHECK(s.mu > 0.0);
    // oracle: det(H - lambda I) via cofactors
    const auto charPoly = [&](double lambda) {
        const SymMatrix& h = obj.hessian();
        const double a = h(0, 0) - lambda, b = h(0, 1), c = h(0, 2);
        const double e = h(1, 1) - lambda, f = h(1, 2), i = h(2, 2) - lambda;
        return a * (e * i - f * f) - b * (b * i - f * c) + c * (b * f - e * c);
    };
    CHECK(std::abs(charPoly(s.L)) <= 1e-7 * 1e6);
    CHECK(std::abs(charPoly(s.mu)) <= 1e-7 * 1e6);
    // trace and determinant bracketing sanity
    CHECK(s.L > 100.0);
    CHECK(s.mu < 2.0);
}

TEST_CASE("quad3 sampling moments") {
    const Quadratic3Objective obj;
    RngStream rng(2024, 0);
    const int n = 100000;

    SUBCASE("mean at a fixed point") {
        const Empirical e = sampleMoments(obj, {1.0, 0.0, 0.0}, n, rng);
        const Vector expected{2.0, 1.0, 1.0};
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(e.mean[i] - expected[i]) <= 5.0 * e.meanSe[i]);
    }
    SUBCASE("covariance is isotropic noise") {
        const Empirical e = sampleMoments(obj, {0.5, -0.25, 2.0}, n, rng);
        const SymMatrix exact = obj.exactCovariance({0.5, -0.25, 2.0});
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                CHECK(std::abs(e.cov(i, j) - exact(i, j)) <= 10.0 * e.covSe(i, j));
    }
}

TEST_CASE("unbiasedness at random points") {
    RngStream rng(99, 0);
    const Quadratic3Objective q3;
    const Quadratic2Objective q2;
    const StochasticObjective* objs[] = {&q3, &q2};
    for (const StochasticObjective* obj : objs) {
        for (int p = 0; p < 10; ++p) {
            const Vector xi = randomVec(obj->dim(), rng, -2.0, 2.0);
            const Empirical e = sampleMoments(*obj, xi, 100000, rng);
            const Vector exact = obj->exactGradient(xi);
            for (int i = 0; i < obj->dim(); ++i)
                CHECK(std::abs(e.mean[i] - exact[i]) <= 5.0 * e.meanSe[i]);
        }
    }
}

TEST_CASE("quad3 noiseless variant") {
    const Quadratic3Objective obj(0.0);
    RngStream rng(1, 0);
    Vector draw(3);
    obj.sampleGradientInto({1.0, 2.0, 3.0}, rng, draw);
    CHECK(draw == obj.exactGradient({1.0, 2.0, 3.0}));
    CHECK(obj.exactCovariance({1.0, 2.0, 3.0}).frobeniusNorm() == 0.0);
}

TEST_CASE("quad2 exact oracles") {
    const Quadratic2Objective obj;  // kappa = 100

    const SymMatrix& eh = obj.meanHessian();
    CHECK(eh(0, 0) == doctest::Approx(100.5));
    CHECK(eh(0, 1) == doctest::Approx(0.25));
    CHECK(eh(1, 1) == doctest::Approx(1.0));

    SUBCASE("minimizer by Cramer against the residual oracle") {
        const Vector xiStar = obj.minimizer();
        CHECK(xiStar[0] == doctest::Approx(0.0074673).epsilon(1e-4));
        CHECK(xiStar[1] == doctest::Approx(0.9981333).epsilon(1e-6));
        CHECK((eh.apply(xiStar) - obj.b()).norm() < 1e-12);
        CHECK(obj.exactGradient(xiStar).norm() < 1e-12);
    }
    SUBCASE("identity mean hessian") {
        // E[H] = I requires A = I
        const Quadratic2Objective iso(SymMatrix::identity(2), Vector{1.0, 1.0});
        const Vector xiStar = iso.minimizer();
        CHECK(xiStar[0] == doctest::Approx(1.0));
        CHECK(xiStar[1] == doctest::Approx(1.0));
        CHECK(iso.smoothness().L == doctest::Approx(iso.smoothness().mu));
    }
    SUBCASE("smoothness from the 2x2 closed form") {
        const Smoothness s = obj.smoothness();
        CHECK(s.L == doctest::Approx(100.50063).epsilon(1e-6));
        CHECK(s.mu == doctest::Approx(0.99937).epsilon(1e-4));
    }
    SUBCASE("singular mean hessian") {
        // E[H] = (I + A)/2 singular when det = 0: kappa = -0.4375
        const Quadratic2Objective bad(-0.4375);
        CHECK_THROWS_AS(bad.minimizer(), SingularMatrix);
    }
}

TEST_CASE("quad2 sampling moments") {
    const Quadratic2Objective obj;
    RngStream rng(31, 0);
    const int n = 100000;

    SUBCASE("mean matches E[H] xi - b") {
        const Vector xi{3.0, -4.0};
        const Empirical e = sampleMoments(obj, xi, n, rng);
        const Vector exact = obj.exactGradient(xi);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(e.mean[i] - exact[i]) <= 5.0 * e.meanSe[i]);
    }
    SUBCASE("covariance is the rank-1 uniform form") {
        const Vector xi{2.0, 1.0};
        const Empirical e = sampleMoments(obj, xi, n, rng);
        const SymMatrix exact = obj.exactCovariance(xi);
        // oracle route: Var(U(0,1)) = 1/12 times the outer product of (A - I) xi
        const Vector w = (obj.a() - SymMatrix::identity(2)).apply(xi);
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) {
                CHECK(exact(i, j) == doctest::Approx(w[i] * w[j] / 12.0));
                CHECK(std::abs(e.cov(i, j) - exact(i, j)) <= 10.0 * e.covSe(i, j));
            }
    }
    SUBCASE("zero covariance at the origin") {
        CHECK(obj.exactCovariance({0.0, 0.0}).frobeniusNorm() == 0.0);
    }
}

TEST_CASE("smoothness inequalities hold with the reported constants") {
    RngStream rng(55, 0);
    const Quadratic3Objective q3;
    const Quadratic2Objective q2;
    const StochasticObjective* objs[] = {&q3, &q2};
    for (const StochasticObjective* obj : objs) {
        const Smoothness s = obj->smoothness();
        for (int trial = 0; trial < 200; ++trial) {
            const Vector x = randomVec(obj->dim(), rng, -5.0, 5.0);
            const Vector y = randomVec(obj->dim(), rng, -5.0, 5.0);
            const double fy = obj->exactValue(y);
            const double fx = obj->exactValue(x);
            const double lin = obj->exactGradient(x).dot(y - x);
            const double distSq = (y - x).normSq();
            const double slack = 1e-9 * std::max(1.0, std::abs(fx) + std::abs(fy));
            CHECK(fy <= fx + lin + 0.5 * s.L * distSq + slack);
            CHECK(fy >= fx + lin + 0.5 * s.mu * distSq - slack);
        }
    }
}

TEST_CASE("exact gradients match finite differences") {
    RngStream rng(77, 0);
    const Quadratic3Objective q3;
    const Quadratic2Objective q2;
    const StochasticObjective* objs[] = {&q3, &q2};
    for (const StochasticObjective* obj : objs) {
        for (int trial = 0; trial < 20; ++trial) {
            const Vector xi = randomVec(obj->dim(), rng, -2.0, 2.0);
            const Vector g = obj->exactGradient(xi);
            const Vector fd = finiteDifferenceGradient(*obj, xi, 1e-5);
            CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
        }
    }
}

TEST_CASE("sampling is deterministic per stream and independent across streams") {
    const Quadratic3Objective obj;
    RngStream a(123, 4), b(123, 4), c(123, 5);
    Vector da(3), db(3), dc(3);
    obj.sampleGradientInto({1.0, 1.0, 1.0}, a, da);
    obj.sampleGradientInto({1.0, 1.0, 1.0}, b, db);
    obj.sampleGradientInto({1.0, 1.0, 1.0}, c, dc);
    CHECK(da == db);
    CHECK(!(da == dc));
}

}  // TEST_SUITE
