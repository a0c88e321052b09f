#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "adabatch/errors.hpp"

namespace adabatch {

/// Small dense regime: everything here is fixed-capacity and allocation-free.
inline constexpr int kMaxDim = 16;

/// Relative tests divide by ||grad||^2; below this floor they are declared
/// undefined and the operations raise DegenerateGradient.
inline constexpr double kGradFloor = 1e-12;

/// Floor scaled by the iterate magnitude: 1e-12 * max(1, ||xi||).
inline double gradFloor(double xiNorm) {
    return kGradFloor * std::max(1.0, xiNorm);
}

class Vector {
public:
    Vector() = default;

    explicit Vector(int dim) : d_(checkDim(dim)) {}

    Vector(std::initializer_list<double> entries) : d_(checkDim(static_cast<int>(entries.size()))) {
        int i = 0;
        for (double v : entries) a_[i++] = v;
    }

    static Vector zeros(int dim) { return Vector(dim); }

    static Vector fromStd(const std::vector<double>& entries) {
        Vector out(checkDim(static_cast<int>(entries.size())));
        for (int i = 0; i < out.d_; ++i) out.a_[i] = entries[i];
        return out;
    }

    int dim() const { return d_; }

    double operator[](int i) const { return a_[i]; }
    double& operator[](int i) { return a_[i]; }

    double dot(const Vector& o) const {
        requireSameDim(o);
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += a_[i] * o.a_[i];
        return s;
    }

    double normSq() const {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += a_[i] * a_[i];
        return s;
    }

    double norm() const { return std::sqrt(normSq()); }

    bool allFinite() const {
        for (int i = 0; i < d_; ++i)
            if (!std::isfinite(a_[i])) return false;
        return true;
    }

    Vector& operator+=(const Vector& o) {
        requireSameDim(o);
        for (int i = 0; i < d_; ++i) a_[i] += o.a_[i];
        return *this;
    }

    Vector& operator-=(const Vector& o) {
        requireSameDim(o);
        for (int i = 0; i < d_; ++i) a_[i] -= o.a_[i];
        return *this;
    }

    Vector& operator*=(double c) {
        for (int i = 0; i < d_; ++i) a_[i] *= c;
        return *this;
    }

    /// this += c * v, without a temporary.
    Vector& addScaled(const Vector& v, double c) {
        requireSameDim(v);
        for (int i = 0; i < d_; ++i) a_[i] += c * v.a_[i];
        return *this;
    }

    bool operator==(const Vector& o) const {
        if (d_ != o.d_) return false;
        for (int i = 0; i < d_; ++i)
            if (a_[i] != o.a_[i]) return false;
        return true;
    }

private:
    static int checkDim(int dim) {
        if (dim < 0 || dim > kMaxDim) throw DimensionMismatch("vector dimension out of range [0, 16]");
        return dim;
    }

    void requireSameDim(const Vector& o) const {
        if (d_ != o.d_) throw DimensionMismatch("vector dimensions differ");
    }

    std::array<double, kMaxDim> a_{};
    int d_ = 0;

    friend class SymMatrix;
};

inline Vector operator+(Vector a, const Vector& b) { return a += b; }
inline Vector operator-(Vector a, const Vector& b) { return a -= b; }
inline Vector operator*(double c, Vector a) { return a *= c; }
inline Vector operator*(Vector a, double c) { return a *= c; }
inline double dot(const Vector& a, const Vector& b) { return a.dot(b); }

/// Dense symmetric matrix. Storage is the full square; any constructor that
/// takes raw entries symmetrizes them as (M + M^T) / 2, so entries[i][j] ==
/// entries[j][i] holds exactly thereafter.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(int dim) : d_(checkDim(dim)) {}

    SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : d_(checkDim(static_cast<int>(rows.size()))) {
        int i = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != d_) throw DimensionMismatch("matrix rows must be square");
            int j = 0;
            for (double v : row) a_[i * d_ + j++] = v;
            ++i;
        }
        symmetrize();
    }

    static SymMatrix zeros(int dim) { return SymMatrix(dim); }

    static SymMatrix identity(int dim) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.a_[i * dim + i] = 1.0;
        return m;
    }

    static SymMatrix scaledIdentity(int dim, double c) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.a_[i * dim + i] = c;
        return m;
    }

    /// v (x) v
    static SymMatrix outer(const Vector& v) {
        SymMatrix m(v.dim());
        for (int i = 0; i < m.d_; ++i)
            for (int j = 0; j < m.d_; ++j) m.a_[i * m.d_ + j] = v[i] * v[j];
        return m;
    }

    /// Row-major buffer of dim*dim entries, symmetrized on construction.
    static SymMatrix fromRowMajor(int dim, const double* entries) {
        SymMatrix m(dim);
        for (int i = 0; i < dim * dim; ++i) m.a_[i] = entries[i];
        m.symmetrize();
        return m;
    }

    int dim() const { return d_; }

    double operator()(int i, int j) const { return a_[i * d_ + j]; }

    /// Sets both (i, j) and (j, i).
    void set(int i, int j, double v) {
        a_[i * d_ + j] = v;
        a_[j * d_ + i] = v;
    }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += a_[i * d_ + i];
        return s;
    }

    double frobeniusNorm() const {
        double s = 0.0;
        for (int i = 0; i < d_ * d_; ++i) s += a_[i] * a_[i];
        return std::sqrt(s);
    }

    Vector apply(const Vector& v) const {
        if (v.dim() != d_) throw DimensionMismatch("matrix-vector dimensions differ");
        Vector out(d_);
        for (int i = 0; i < d_; ++i) {
            double s = 0.0;
            for (int j = 0; j < d_; ++j) s += a_[i * d_ + j] * v[j];
            out[i] = s;
        }
        return out;
    }

    /// v . (M v)
    double quadraticForm(const Vector& v) const {
        if (v.dim() != d_) throw DimensionMismatch("matrix-vector dimensions differ");
        double s = 0.0;
        for (int i = 0; i < d_; ++i) {
            double row = 0.0;
            for (int j = 0; j < d_; ++j) row += a_[i * d_ + j] * v[j];
            s += v[i] * row;
        }
        return s;
    }

    bool allFinite() const {
        for (int i = 0; i < d_ * d_; ++i)
            if (!std::isfinite(a_[i])) return false;
        return true;
    }

    SymMatrix& operator+=(const SymMatrix& o) {
        requireSameDim(o);
        for (int i = 0; i < d_ * d_; ++i) a_[i] += o.a_[i];
        return *this;
    }

    SymMatrix& operator-=(const SymMatrix& o) {
        requireSameDim(o);
        for (int i = 0; i < d_ * d_; ++i) a_[i] -= o.a_[i];
        return *this;
    }

    SymMatrix& operator*=(double c) {
        for (int i = 0; i < d_ * d_; ++i) a_[i] *= c;
        return *this;
    }

    bool operator==(const SymMatrix& o) const {
        if (d_ != o.d_) return false;
        for (int i = 0; i < d_ * d_; ++i)
            if (a_[i] != o.a_[i]) return false;
        return true;
    }

private:
    static int checkDim(int dim) {
        if (dim < 0 || dim > kMaxDim) throw DimensionMismatch("matrix dimension out of range [0, 16]");
        return dim;
    }

    void requireSameDim(const SymMatrix& o) const {
        if (d_ != o.d_) throw DimensionMismatch("matrix dimensions differ");
    }

    void symmetrize() {
        for (int i = 0; i < d_; ++i)
            for (int j = i + 1; j < d_; ++j) {
                const double v = 0.5 * (a_[i * d_ + j] + a_[j * d_ + i]);
                a_[i * d_ + j] = v;
                a_[j * d_ + i] = v;
            }
    }

    std::array<double, kMaxDim * kMaxDim> a_{};
    int d_ = 0;
};

inline SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
inline SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
inline SymMatrix operator*(double c, SymMatrix a) { return a *= c; }

/// Frobenius double contraction A : B = sum_ij A_ij B_ij.
double contract(const SymMatrix& a, const SymMatrix& b);

/// g / ||g||. Raises DegenerateGradient when ||g|| <= floor.
Vector unitDirection(const Vector& g, double floor = kGradFloor);

/// Parallel/orthogonal decomposition of the estimator error upsilon - grad
/// relative to the exact gradient direction:
///   gamma      = (upsilon . grad) / ||grad||^2 - 1
///   parallel   = gamma * grad
///   orthogonal = upsilon - (upsilon . e) e,   e = grad / ||grad||
/// so that parallel + orthogonal == upsilon - grad and the Pythagorean
/// identity ||upsilon - grad||^2 == ||parallel||^2 + ||orthogonal||^2 holds.
struct ErrorSplit {
    Vector parallel;
    Vector orthogonal;
    double gamma = 0.0;
};

ErrorSplit errorSplit(const Vector& upsilon, const Vector& gradExact, double floor = kGradFloor);

/// Rank-1 projector onto the gradient direction and its complement:
/// pNabla = e (x) e, pPerp = I - e (x) e, e = g / ||g||.
struct ProjectorPair {
    SymMatrix pNabla;
    SymMatrix pPerp;
    Vector direction;
};

ProjectorPair projectors(const Vector& g, double floor = kGradFloor);

/// Extreme eigenvalues of a small symmetric matrix. Closed form for d <= 2,
/// cyclic Jacobi iteration (relative tolerance 1e-12) otherwise.
struct EigExtremes {
    double lambdaMin = 0.0;
    double lambdaMax = 0.0;
};

EigExtremes eigExtremes(const SymMatrix& m);

namespace detail {
/// The general Jacobi path regardless of dimension (exposed so the d == 2
/// closed form can be cross-checked against it).
EigExtremes jacobiEigExtremes(const SymMatrix& m);
}  // namespace detail

}  // namespace adabatch
