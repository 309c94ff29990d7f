#include "qflow/manifold.hpp"

#include <algorithm>
#include <cmath>

namespace qflow {

void MaterialParams::validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!pos(a) || !pos(b) || !pos(c) || !pos(L1) || !pos(Gamma) || !pos(eps))
        throw InvalidInput("MaterialParams: a, b, c, L1, Gamma, eps must all be finite and > 0");
}

double s_plus(const MaterialParams& p) {
    return (p.b + std::sqrt(p.b * p.b + 24.0 * p.a * p.c)) / (4.0 * p.c);
}

double bulk_energy(const QTensor& q, const MaterialParams& p) {
    const double q2 = norm_sq(q);
    return -0.5 * p.a * q2 - (p.b / 3.0) * trace_cubed(q) + 0.25 * p.c * q2 * q2;
}

double bulk_energy_min(const MaterialParams& p) {
    // f_B at the uniaxial minimizer: eigenvalues (2s/3, -s/3, -s/3) give
    // |Q|^2 = 2s^2/3 and tr Q^3 = 2s^3/9.
    const double s = s_plus(p);
    return -p.a * s * s / 3.0 - 2.0 * p.b * s * s * s / 27.0 + p.c * s * s * s * s / 9.0;
}

double tilde_bulk_energy(const QTensor& q, const MaterialParams& p) {
    return bulk_energy(q, p) - bulk_energy_min(p);
}

QTensor bulk_force_J(const QTensor& q, const MaterialParams& p) {
    const Mat3 s = square(q);
    const double q2 = norm_sq(q);
    const double idterm = (p.b / 3.0) * q2;
    const double cq2 = p.c * q2;
    // zz follows from -(xx+yy), so tracelessness is exact.
    return QTensor(-p.a * q.xx() - p.b * s[0][0] + cq2 * q.xx() + idterm,
                   -p.a * q.yy() - p.b * s[1][1] + cq2 * q.yy() + idterm,
                   -p.a * q.xy() - p.b * s[0][1] + cq2 * q.xy(),
                   -p.a * q.xz() - p.b * s[0][2] + cq2 * q.xz(),
                   -p.a * q.yz() - p.b * s[1][2] + cq2 * q.yz());
}

FrameAtQ FrameAtQ::from_axes(const Vec3& n1, const Vec3& n2, const Vec3& n3) {
    FrameAtQ f;
    f.n1 = n1;
    f.n2 = n2;
    f.n3 = n3;
    const double r2 = 1.0 / std::sqrt(2.0);
    const double r6 = std::sqrt(6.0);
    f.t1 = 2.0 * r2 * sym_pair(n3, n2);
    f.t2 = 2.0 * r2 * sym_pair(n3, n1);
    f.e1 = 2.0 * r2 * sym_pair(n2, n1);
    f.e2 = r2 * (sym_pair(n1, n1) - sym_pair(n2, n2));
    // e3 = sqrt6 (n1n1/2 + n2n2/2 - Id/3); sym_pair already removes the trace
    // so n1n1/2 + n2n2/2 - Id/3 = (sym_pair(n1,n1) + sym_pair(n2,n2))/2 exactly
    // when n1, n2 are unit.
    f.e3 = 0.5 * r6 * (sym_pair(n1, n1) + sym_pair(n2, n2));
    return f;
}

TangentNormalCoeffs decompose_at_N(const QTensor& v, const FrameAtQ& frame) {
    return TangentNormalCoeffs{
        {frobenius(v, frame.t1), frobenius(v, frame.t2)},
        {frobenius(v, frame.e1), frobenius(v, frame.e2), frobenius(v, frame.e3)}};
}

std::pair<QTensor, FrameAtQ> project_to_N(const QTensor& q, const MaterialParams& p,
                                          double gap_tol) {
    const EigenDecomposition eig = eig_sym3(q);
    if (!(eig.gap() >= gap_tol))
        throw DegenerateProjection("project_to_N: eigenvalue gap below tolerance, "
                                   "nearest point on N is not unique");
    const double sp = s_plus(p);
    // Principal axis -> frame n3; the two remaining eigenvectors span the plane.
    FrameAtQ frame = FrameAtQ::from_axes(eig.n[1], eig.n[2], eig.n[0]);
    return {uniaxial(sp, eig.n[0]), frame};
}

namespace {
double dist_sq_choice(double la, double lb, double sp) {
    const double u = la + sp / 3.0;
    const double v = lb + sp / 3.0;
    const double w = la + lb + 2.0 * sp / 3.0;
    return u * u + v * v + w * w;
}
}  // namespace

double dist_to_N(const QTensor& q, const MaterialParams& p) {
    const EigenDecomposition eig = eig_sym3(q);
    const double sp = s_plus(p);
    const auto& l = eig.lambda;
    const double d2 = std::min({dist_sq_choice(l[1], l[2], sp),   // principal = l[0]
                                dist_sq_choice(l[0], l[2], sp),
                                dist_sq_choice(l[0], l[1], sp)});
    return std::sqrt(d2);
}

double lemma24_ratio(const QTensor& q, const MaterialParams& p) {
    const double d = dist_to_N(q, p);
    if (!(d > 0.0)) throw UndefinedRatio("lemma24_ratio: dist(Q, N) = 0, ratio undefined");
    return tilde_bulk_energy(q, p) / (d * d);
}

double scalar_G(double x, double y, const MaterialParams& p) {
    const double sp = s_plus(p);
    const double u = x + sp / 3.0;
    const double v = y + sp / 3.0;
    const double w = x + y + 2.0 * sp / 3.0;
    return u * u + v * v + w * w;
}

double scalar_H(double x, double y, const MaterialParams& p) {
    const double s2 = x * x + y * y + x * y;
    return -p.a * s2 + p.b * (x * x * y + x * y * y) + p.c * s2 * s2 - bulk_energy_min(p);
}

std::pair<double, double> lemma24_band(const MaterialParams& p) {
    const double sp = s_plus(p);
    return {p.b * sp / 12.0, 3.0 * p.a + 0.75 * p.b * sp};
}

}  // namespace qflow
