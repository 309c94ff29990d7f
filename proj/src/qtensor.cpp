#include "qflow/qtensor.hpp"

#include <algorithm>
#include <cmath>

namespace qflow {

QTensor from_matrix(const Mat3& m) {
    for (const auto& row : m)
        for (double v : row)
            if (!std::isfinite(v)) throw InvalidInput("from_matrix: non-finite entry");
    const double sxy = 0.5 * (m[0][1] + m[1][0]);
    const double sxz = 0.5 * (m[0][2] + m[2][0]);
    const double syz = 0.5 * (m[1][2] + m[2][1]);
    const double tr3 = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    return QTensor(m[0][0] - tr3, m[1][1] - tr3, sxy, sxz, syz);
}

Mat3 square(const QTensor& q) {
    const double xx = q.xx(), yy = q.yy(), zz = q.zz();
    const double xy = q.xy(), xz = q.xz(), yz = q.yz();
    Mat3 s;
    s[0][0] = xx * xx + xy * xy + xz * xz;
    s[1][1] = xy * xy + yy * yy + yz * yz;
    s[2][2] = xz * xz + yz * yz + zz * zz;
    s[0][1] = s[1][0] = xx * xy + xy * yy + xz * yz;
    s[0][2] = s[2][0] = xx * xz + xy * yz + xz * zz;
    s[1][2] = s[2][1] = xy * xz + yy * yz + yz * zz;
    return s;
}

double trace_cubed(const QTensor& q) {
    // tr(Q^3) = Q^2 : Q for symmetric Q.
    const Mat3 s = square(q);
    return s[0][0] * q.xx() + s[1][1] * q.yy() + s[2][2] * q.zz() +
           2.0 * (s[0][1] * q.xy() + s[0][2] * q.xz() + s[1][2] * q.yz());
}

QTensor uniaxial(double s, const Vec3& n) {
    return QTensor(s * (n[0] * n[0] - 1.0 / 3.0), s * (n[1] * n[1] - 1.0 / 3.0),
                   s * n[0] * n[1], s * n[0] * n[2], s * n[1] * n[2]);
}

QTensor sym_pair(const Vec3& a, const Vec3& b) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = 0.5 * (a[i] * b[j] + b[i] * a[j]);
    return from_matrix(m);
}

namespace {

void fix_sign(Vec3& v) {
    std::size_t k = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (std::abs(v[i]) > std::abs(v[k])) k = i;  // strict: first index wins ties
    if (v[k] < 0.0)
        for (double& x : v) x = -x;
}

void normalize(Vec3& v) {
    const double n = norm(v);
    for (double& x : v) x /= n;
}

// Cyclic Jacobi rotations; robust near degenerate spectra.
void jacobi_eig(const Mat3& a_in, std::array<double, 3>& w, Mat3& v_cols) {
    Mat3 a = a_in;
    v_cols = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                const double theta = 0.5 * (a[q][q] - a[p][p]) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v_cols[k][p], vkq = v_cols[k][q];
                    v_cols[k][p] = c * vkp - s * vkq;
                    v_cols[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    w = {a[0][0], a[1][1], a[2][2]};
}

// Eigenvector of (A - lambda I) via the largest cross product of its rows;
// accurate when lambda is well separated from the other eigenvalues.
Vec3 eigvec_cross(const Mat3& m, double lambda, const Vec3& fallback_perp_to) {
    Mat3 b = m;
    for (int i = 0; i < 3; ++i) b[i][i] -= lambda;
    const Vec3 r0 = {b[0][0], b[0][1], b[0][2]};
    const Vec3 r1 = {b[1][0], b[1][1], b[1][2]};
    const Vec3 r2 = {b[2][0], b[2][1], b[2][2]};
    const std::array<Vec3, 3> cands = {cross(r0, r1), cross(r0, r2), cross(r1, r2)};
    std::size_t best = 0;
    double bestn = dot(cands[0], cands[0]);
    for (std::size_t i = 1; i < 3; ++i) {
        const double n2 = dot(cands[i], cands[i]);
        if (n2 > bestn) {
            bestn = n2;
            best = i;
        }
    }
    Vec3 v = cands[best];
    if (bestn <= 0.0 || !std::isfinite(bestn)) {
        // Rank-deficient pencil (degenerate pair): pick any unit vector
        // orthogonal to the given direction, deterministically.
        std::size_t k = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (std::abs(fallback_perp_to[i]) < std::abs(fallback_perp_to[k])) k = i;
        Vec3 e{0, 0, 0};
        e[k] = 1.0;
        const double d = dot(e, fallback_perp_to);
        v = {e[0] - d * fallback_perp_to[0], e[1] - d * fallback_perp_to[1],
             e[2] - d * fallback_perp_to[2]};
    }
    normalize(v);
    return v;
}

}  // namespace

EigenDecomposition eig_sym3(const QTensor& q, double degeneracy_tol) {
    EigenDecomposition out;
    const Mat3 m = q.matrix();
    const double scale = std::max({std::abs(q.xx()), std::abs(q.yy()), std::abs(q.zz()),
                                   std::abs(q.xy()), std::abs(q.xz()), std::abs(q.yz())});
    if (scale == 0.0) {
        out.lambda = {0.0, 0.0, 0.0};
        out.n = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
        return out;
    }

    // Analytic eigenvalues of a traceless symmetric 3x3 (trigonometric form).
    const double p1 = q.xy() * q.xy() + q.xz() * q.xz() + q.yz() * q.yz();
    const double p2 = q.xx() * q.xx() + q.yy() * q.yy() + q.zz() * q.zz() + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double detb = 0.0;
    {
        const double inv = 1.0 / p;
        const double bxx = q.xx() * inv, byy = q.yy() * inv, bzz = q.zz() * inv;
        const double bxy = q.xy() * inv, bxz = q.xz() * inv, byz = q.yz() * inv;
        detb = bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bxz) +
               bxz * (bxy * byz - byy * bxz);
    }
    double r = 0.5 * detb;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double l0 = 2.0 * p * std::cos(phi);               // max
    const double l2 = 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);  // min
    const double l1 = -l0 - l2;                              // exact zero-sum
    out.lambda = {l0, l1, l2};

    // The trigonometric roots lose ~eps/gap digits near a repeated root
    // (acos'(r) blows up at |r| = 1), so the discriminant guard must stay
    // wide enough that the analytic branch still reconstructs to 1e-12.
    const double min_gap = std::min(l0 - l1, l1 - l2);
    if (1.0 - r * r <= degeneracy_tol || min_gap <= degeneracy_tol * (2.0 * p)) {
        // Near-degenerate spectrum: Jacobi for the full decomposition.
        std::array<double, 3> w;
        Mat3 vc;
        jacobi_eig(m, w, vc);
        std::array<int, 3> idx = {0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return w[a] > w[b]; });
        for (int i = 0; i < 3; ++i) {
            out.lambda[i] = w[idx[i]];
            out.n[i] = {vc[0][idx[i]], vc[1][idx[i]], vc[2][idx[i]]};
        }
    } else {
        out.n[0] = eigvec_cross(m, l0, {1, 0, 0});
        out.n[2] = eigvec_cross(m, l2, out.n[0]);
        // Re-orthogonalize and close the frame with a cross product.
        const double d = dot(out.n[2], out.n[0]);
        for (int i = 0; i < 3; ++i) out.n[2][i] -= d * out.n[0][i];
        normalize(out.n[2]);
        out.n[1] = cross(out.n[2], out.n[0]);
    }
    for (auto& v : out.n) fix_sign(v);
    return out;
}

}  // namespace qflow
