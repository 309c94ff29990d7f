#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "qflow/errors.hpp"

namespace qflow {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // row major

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline Vec3 vsub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

/// Symmetric traceless 3x3 tensor stored by its five independent
/// components (xx, yy, xy, xz, yz); zz is reconstructed as -(xx+yy), so the
/// symmetric-traceless constraint holds by construction.
class QTensor {
  public:
    constexpr QTensor() : c_{} {}
    constexpr QTensor(double xx, double yy, double xy, double xz, double yz)
        : c_{xx, yy, xy, xz, yz} {}

    static constexpr std::size_t kComponents = 5;

    double xx() const { return c_[0]; }
    double yy() const { return c_[1]; }
    double zz() const { return -c_[0] - c_[1]; }
    double xy() const { return c_[2]; }
    double xz() const { return c_[3]; }
    double yz() const { return c_[4]; }

    double comp(std::size_t i) const { return c_[i]; }
    double& comp(std::size_t i) { return c_[i]; }
    const std::array<double, 5>& components() const { return c_; }

    Mat3 matrix() const {
        return {{{xx(), xy(), xz()}, {xy(), yy(), yz()}, {xz(), yz(), zz()}}};
    }

    double operator()(std::size_t i, std::size_t j) const {
        static constexpr int idx[3][3] = {{0, 2, 3}, {2, 1, 4}, {3, 4, -1}};
        const int k = idx[i][j];
        return k < 0 ? zz() : c_[static_cast<std::size_t>(k)];
    }

    QTensor& operator+=(const QTensor& o) {
        for (std::size_t i = 0; i < 5; ++i) c_[i] += o.c_[i];
        return *this;
    }
    QTensor& operator-=(const QTensor& o) {
        for (std::size_t i = 0; i < 5; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    QTensor& operator*=(double s) {
        for (std::size_t i = 0; i < 5; ++i) c_[i] *= s;
        return *this;
    }

    friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
    friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
    friend QTensor operator*(QTensor a, double s) { return a *= s; }
    friend QTensor operator*(double s, QTensor a) { return a *= s; }
    friend QTensor operator-(QTensor a) { return a *= -1.0; }

    bool finite() const {
        for (double v : c_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    std::array<double, 5> c_;
};

/// Symmetrize then remove the trace: Q = (M + M^T)/2 - tr(M)/3 Id.
/// Exact identity on inputs that are already symmetric traceless.
QTensor from_matrix(const Mat3& m);

/// Frobenius inner product A:B = A_ij B_ij.
inline double frobenius(const QTensor& a, const QTensor& b) {
    const double azz = a.zz(), bzz = b.zz();
    return a.xx() * b.xx() + a.yy() * b.yy() + azz * bzz +
           2.0 * (a.xy() * b.xy() + a.xz() * b.xz() + a.yz() * b.yz());
}

inline double norm(const QTensor& q) { return std::sqrt(frobenius(q, q)); }
inline double norm_sq(const QTensor& q) { return frobenius(q, q); }

/// Q*Q, symmetric but in general not traceless; returned as the full matrix.
Mat3 square(const QTensor& q);

/// tr(Q^3) = 3 det(Q) for traceless Q.
double trace_cubed(const QTensor& q);

/// s (n (x) n - Id/3); uniaxial tensor with order parameter s along unit n.
QTensor uniaxial(double s, const Vec3& n);

/// Rank-one symmetrized pair: (a (x) b + b (x) a)/2, detraced.
QTensor sym_pair(const Vec3& a, const Vec3& b);

/// Eigen-decomposition of a QTensor, eigenvalues descending.
struct EigenDecomposition {
    std::array<double, 3> lambda;  // lambda[0] >= lambda[1] >= lambda[2]
    std::array<Vec3, 3> n;         // orthonormal, sign-fixed
    double gap() const { return lambda[0] - lambda[1]; }
};

/// Analytic characteristic-polynomial eigensolver with a Jacobi-rotation
/// fallback when the normalized cubic discriminant (or the relative
/// eigenvalue gap) falls below `degeneracy_tol`. Eigenvector signs:
/// largest-magnitude component positive, ties broken by first index.
EigenDecomposition eig_sym3(const QTensor& q, double degeneracy_tol = 1e-4);

}  // namespace qflow
