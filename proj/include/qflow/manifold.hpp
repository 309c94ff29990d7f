#pragma once

#include <array>
#include <utility>

#include "qflow/qtensor.hpp"

namespace qflow {

/// Bulk coefficients a,b,c, elastic constant L1, rotational constant Gamma,
/// relaxation parameter eps. All strictly positive.
struct MaterialParams {
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;
    double L1 = 1.0;
    double Gamma = 1.0;
    double eps = 1e-2;

    void validate() const;
};

/// Preferred uniaxial order parameter: the positive root of 2cs^2 - bs - 3a = 0,
/// s+ = (b + sqrt(b^2 + 24ac)) / (4c).
double s_plus(const MaterialParams& p);

/// f_B(Q) = -(a/2)|Q|^2 - (b/3) tr(Q^3) + (c/4)|Q|^4.
double bulk_energy(const QTensor& q, const MaterialParams& p);

/// min over symmetric traceless Q of f_B, attained on the uniaxial manifold
/// at order parameter s+; evaluated in closed form.
double bulk_energy_min(const MaterialParams& p);

/// Nonnegative shifted bulk energy f~_B = f_B - min f_B; zero exactly on N.
double tilde_bulk_energy(const QTensor& q, const MaterialParams& p);

/// J(Q) = -aQ - bQ^2 + c|Q|^2 Q + (b/3)|Q|^2 Id. The variational derivative
/// of f_B within symmetric traceless matrices; vanishes on N.
QTensor bulk_force_J(const QTensor& q, const MaterialParams& p);

/// Orthonormal frame attached to a point s+(n3 (x) n3 - Id/3) of N:
/// n3 is the principal axis, (n1, n2) span its orthogonal plane.
/// {t1, t2} spans the tangent space of N, {e1, e2, e3} its orthogonal
/// complement within the symmetric traceless matrices.
struct FrameAtQ {
    Vec3 n1, n2, n3;
    QTensor t1, t2, e1, e2, e3;

    static FrameAtQ from_axes(const Vec3& n1, const Vec3& n2, const Vec3& n3);

    std::array<const QTensor*, 5> basis() const { return {&t1, &t2, &e1, &e2, &e3}; }
};

struct TangentNormalCoeffs {
    std::array<double, 2> tangent;  // along t1, t2
    std::array<double, 3> normal;   // along e1, e2, e3
    double tangent_norm_sq() const { return tangent[0] * tangent[0] + tangent[1] * tangent[1]; }
    double normal_norm_sq() const {
        return normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2];
    }
};

/// Coefficients of V in the frame's orthonormal basis {t1,t2,e1,e2,e3}.
TangentNormalCoeffs decompose_at_N(const QTensor& v, const FrameAtQ& frame);

/// Nearest point of N and the frame there: pi_N(Q) = s+(n_max (x) n_max - Id/3)
/// with n_max the top eigenvector. Throws DegenerateProjection when the top
/// eigenvalue gap is below gap_tol (nearest point not unique).
std::pair<QTensor, FrameAtQ> project_to_N(const QTensor& q, const MaterialParams& p,
                                          double gap_tol);

/// dist(Q, N) from the eigenvalue formula
///   dist^2 = (l1'+s+/3)^2 + (l2'+s+/3)^2 + (l1'+l2'+2s+/3)^2
/// with (l1', l2') the two non-principal eigenvalues; evaluated as the min
/// over the three eigenvalue labelings so degenerate spectra are covered.
double dist_to_N(const QTensor& q, const MaterialParams& p);

/// f~_B(Q) / dist(Q, N)^2. Throws UndefinedRatio at dist = 0.
double lemma24_ratio(const QTensor& q, const MaterialParams& p);

/// Squared eigenvalue-space distance to the uniaxial minimizer:
/// G(x,y) = (x+s+/3)^2 + (y+s+/3)^2 + (x+y+2s+/3)^2.
double scalar_G(double x, double y, const MaterialParams& p);

/// f~_B of the tensor with eigenvalues (x, y, -x-y):
/// H(x,y) = -a(x^2+y^2+xy) + b(x^2 y + x y^2) + c(x^2+y^2+xy)^2 - min f_B.
double scalar_H(double x, double y, const MaterialParams& p);

/// [b s+/12, 3a + 3b s+/4], the two-sided bound on H/G near the minimizer.
std::pair<double, double> lemma24_band(const MaterialParams& p);

}  // namespace qflow
