#include "adabatch/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace adabatch {

double contract(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("contraction dimensions differ");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) s += a(i, j) * b(i, j);
    return s;
}

Vector unitDirection(const Vector& g, double floor) {
    const double n = g.norm();
    if (!(n > floor)) throw DegenerateGradient("gradient norm at or below floor");
    Vector e = g;
    e *= 1.0 / n;
    return e;
}

ErrorSplit errorSplit(const Vector& upsilon, const Vector& gradExact, double floor) {
    if (upsilon.dim() != gradExact.dim()) throw DimensionMismatch("errorSplit dimensions differ");
    const double gns = gradExact.normSq();
    if (!(std::sqrt(gns) > floor)) throw DegenerateGradient("gradient norm at or below floor");

    ErrorSplit out;
    out.gamma = upsilon.dot(gradExact) / gns - 1.0;
    out.parallel = out.gamma * gradExact;
    const Vector e = unitDirection(gradExact, floor);
    out.orthogonal = upsilon;
    out.orthogonal.addScaled(e, -upsilon.dot(e));
    return out;
}

ProjectorPair projectors(const Vector& g, double floor) {
    ProjectorPair out;
    out.direction = unitDirection(g, floor);
    out.pNabla = SymMatrix::outer(out.direction);
    out.pPerp = SymMatrix::identity(g.dim());
    out.pPerp -= out.pNabla;
    return out;
}

namespace {

EigExtremes closedForm2x2(const SymMatrix& m) {
    const double a = m(0, 0);
    const double c = m(1, 1);
    const double b = m(0, 1);
    const double mid = 0.5 * (a + c);
    const double disc = std::hypot(0.5 * (a - c), b);
    return {mid - disc, mid + disc};
}

}  // namespace

namespace detail {

EigExtremes jacobiEigExtremes(const SymMatrix& m) {
    const int d = m.dim();
    if (d == 0) throw DimensionMismatch("empty matrix");
    SymMatrix a = m;

    constexpr int kMaxSweeps = 64;
    constexpr double kRelTol = 1e-12;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += 2.0 * a(p, q) * a(p, q);
        off = std::sqrt(off);
        const double scale = a.frobeniusNorm();
        if (off <= kRelTol * (scale > 0.0 ? scale : 1.0)) {
            double lo = a(0, 0), hi = a(0, 0);
            for (int i = 1; i < d; ++i) {
                lo = std::min(lo, a(i, i));
                hi = std::max(hi, a(i, i));
            }
            return {lo, hi};
        }
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                const double app = a(p, p), aqq = a(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for (int i = 0; i < d; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p), aiq = a(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
            }
        }
    }
    throw ConvergenceFailure("Jacobi eigenvalue iteration did not converge");
}

}  // namespace detail

EigExtremes eigExtremes(const SymMatrix& m) {
    switch (m.dim()) {
        case 0:
            throw DimensionMismatch("empty matrix");
        case 1:
            return {m(0, 0), m(0, 0)};
        case 2:
            return closedForm2x2(m);
        default:
            return detail::jacobiEigExtremes(m);
    }
}

}  // namespace adabatch
