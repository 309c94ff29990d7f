#include "qflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "qflow/kernels.hpp"
#include "qflow/solver.hpp"

namespace qflow {

namespace {

// Periodic neighbor index along one axis.
std::size_t shift_index(const Grid& g, std::size_t i, int axis, int dir) {
    const std::size_t s = g.stride(axis);
    const std::size_t na = g.n[axis];
    const std::size_t pos = (i / s) % na;
    if (dir > 0) return (pos + 1 == na) ? i - (na - 1) * s : i + s;
    return (pos == 0) ? i + (na - 1) * s : i - s;
}

}  // namespace

void q_grad_sq(const QField& q, std::vector<double>& out) {
    const Grid& g = q.grid;
    const std::size_t n = g.cells();
    out.assign(n, 0.0);
    for (int a = 0; a < g.dim; ++a) {
        if (g.n[a] <= 1) continue;
        const double inv2h = 1.0 / (2.0 * g.spacing(a));
        parallel_for(0, n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t im = shift_index(g, i, a, -1);
                const std::size_t ip = shift_index(g, i, a, +1);
                const double dxx = (q.ch[0][ip] - q.ch[0][im]) * inv2h;
                const double dyy = (q.ch[1][ip] - q.ch[1][im]) * inv2h;
                const double dxy = (q.ch[2][ip] - q.ch[2][im]) * inv2h;
                const double dxz = (q.ch[3][ip] - q.ch[3][im]) * inv2h;
                const double dyz = (q.ch[4][ip] - q.ch[4][im]) * inv2h;
                const double dzz = -(dxx + dyy);
                out[i] += dxx * dxx + dyy * dyy + dzz * dzz +
                          2.0 * (dxy * dxy + dxz * dxz + dyz * dyz);
            }
        });
    }
}

void q_grad_sq_staggered(const QField& q, std::vector<double>& out) {
    const Grid& g = q.grid;
    const std::size_t n = g.cells();
    out.assign(n, 0.0);
    for (int a = 0; a < g.dim; ++a) {
        if (g.n[a] <= 1) continue;
        const double invh = 1.0 / g.spacing(a);
        parallel_for(0, n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t ip = shift_index(g, i, a, +1);
                const double dxx = (q.ch[0][ip] - q.ch[0][i]) * invh;
                const double dyy = (q.ch[1][ip] - q.ch[1][i]) * invh;
                const double dxy = (q.ch[2][ip] - q.ch[2][i]) * invh;
                const double dxz = (q.ch[3][ip] - q.ch[3][i]) * invh;
                const double dyz = (q.ch[4][ip] - q.ch[4][i]) * invh;
                const double dzz = -(dxx + dyy);
                out[i] += dxx * dxx + dyy * dyy + dzz * dzz +
                          2.0 * (dxy * dxy + dxz * dxz + dyz * dyz);
            }
        });
    }
}

void energy_density(const QField& q, const MaterialParams& p, std::vector<double>& out) {
    q_grad_sq(q, out);
    const double wgrad = 0.5 * p.L1 / p.Gamma;
    const double wbulk = 1.0 / (p.eps * p.Gamma);
    const std::size_t n = q.cells();
    parallel_for(0, n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = wbulk * tilde_bulk_energy(q.at(i), p) + wgrad * out[i];
    });
}

EnergyBreakdown total_energy(const QField& q, const MaterialParams& p) {
    const std::size_t n = q.cells();
    std::vector<double> grad;
    q_grad_sq_staggered(q, grad);
    std::vector<double> bulk(n);
    for (std::size_t i = 0; i < n; ++i) bulk[i] = tilde_bulk_energy(q.at(i), p);
    const double vol = q.grid.cell_volume();
    EnergyBreakdown out;
    out.dirichlet = 0.5 * p.L1 / p.Gamma * kernels::pairwise_sum(grad.data(), n) * vol;
    out.bulk = kernels::pairwise_sum(bulk.data(), n) * vol / (p.eps * p.Gamma);
    return out;
}

double scaled_heat_kernel(const std::array<double, 3>& x, double t, const ParabolicPoint& z0,
                          const MaterialParams& p, int dim) {
    if (!(t < z0.t)) throw DomainError("scaled_heat_kernel: requires t < t0");
    const double tau_pref = (p.Gamma / p.L1) * (z0.t - t);  // prefactor clock
    const double tau_exp = (p.L1 / p.Gamma) * (z0.t - t);   // exponent clock
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double d = x[a] - z0.x[a];
        r2 += d * d;
    }
    return std::pow(4.0 * M_PI * tau_pref, -0.5 * dim) * std::exp(-r2 / (4.0 * tau_exp));
}

double periodic_heat_kernel(const Grid& g, const std::array<double, 3>& x, double t,
                            const ParabolicPoint& z0, const MaterialParams& p) {
    if (!(t < z0.t)) throw DomainError("periodic_heat_kernel: requires t < t0");
    const double tau_pref = (p.Gamma / p.L1) * (z0.t - t);
    const double tau_exp = (p.L1 / p.Gamma) * (z0.t - t);
    const double axis_pref = 1.0 / std::sqrt(4.0 * M_PI * tau_pref);
    double prod = 1.0;
    for (int a = 0; a < g.dim; ++a) {
        const double L = g.length[a];
        const double d0 = x[a] - z0.x[a];
        double s = std::exp(-d0 * d0 / (4.0 * tau_exp));
        for (int k = 1; k < 64; ++k) {
            const double dp = d0 + k * L;
            const double dm = d0 - k * L;
            const double add = std::exp(-dp * dp / (4.0 * tau_exp)) +
                               std::exp(-dm * dm / (4.0 * tau_exp));
            s += add;
            if (add < 1e-13 * s) break;
        }
        prod *= axis_pref * s;
    }
    return prod;
}

std::size_t StoredRun::nearest_index(double t) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const double d = std::abs(snapshots[i].time - t);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

double StoredRun::max_gap() const {
    double g = 0.0;
    for (std::size_t i = 1; i < snapshots.size(); ++i)
        g = std::max(g, snapshots[i].time - snapshots[i - 1].time);
    return g;
}

const QField& StoredRun::at_time(double t, double tol) const {
    if (snapshots.empty()) throw NeedsSnapshot("run holds no snapshots", t);
    const std::size_t i = nearest_index(t);
    if (std::abs(snapshots[i].time - t) > tol)
        throw NeedsSnapshot("no snapshot within " + std::to_string(tol) + " of t = " +
                                std::to_string(t),
                            t);
    return snapshots[i];
}

namespace {

// The scaled Gaussian factorizes over axes, so the box integral with
// periodic images reduces to per-axis image-summed 1-d kernels.
std::array<std::vector<double>, 3> axis_kernels(const Grid& g, double t,
                                                const ParabolicPoint& z0,
                                                const MaterialParams& p) {
    const double tau_pref = (p.Gamma / p.L1) * (z0.t - t);
    const double tau_exp = (p.L1 / p.Gamma) * (z0.t - t);
    const double axis_pref = 1.0 / std::sqrt(4.0 * M_PI * tau_pref);
    std::array<std::vector<double>, 3> out;
    for (int a = 0; a < g.dim; ++a) {
        const double L = g.length[a];
        out[a].resize(g.n[a]);
        for (std::size_t i = 0; i < g.n[a]; ++i) {
            const double d0 = static_cast<double>(i) * g.spacing(a) - z0.x[a];
            double s = std::exp(-d0 * d0 / (4.0 * tau_exp));
            for (int k = 1; k < 64; ++k) {
                const double dp = d0 + k * L;
                const double dm = d0 - k * L;
                const double add = std::exp(-dp * dp / (4.0 * tau_exp)) +
                                   std::exp(-dm * dm / (4.0 * tau_exp));
                s += add;
                if (add < 1e-13 * s) break;
            }
            out[a][i] = axis_pref * s;
        }
    }
    return out;
}

// int density(x) G_{z0}(x, t) dx over the periodic box, midpoint rule.
double kernel_weighted_sum(const Grid& g, const std::vector<double>& density, double t,
                           const ParabolicPoint& z0, const MaterialParams& p) {
    if (!(t < z0.t)) throw DomainError("kernel_weighted_sum: requires t < t0");
    const auto k = axis_kernels(g, t, z0, p);
    double acc = 0.0;
    for (std::size_t iz = 0; iz < g.n[2]; ++iz) {
        const double gz = g.dim >= 3 ? k[2][iz] : 1.0;
        for (std::size_t iy = 0; iy < g.n[1]; ++iy) {
            const double gy = g.dim >= 2 ? k[1][iy] : 1.0;
            double row = 0.0;
            const std::size_t base = (iz * g.n[1] + iy) * g.n[0];
            for (std::size_t ix = 0; ix < g.n[0]; ++ix)
                row += density[base + ix] * k[0][ix];
            acc += row * gy * gz;
        }
    }
    return acc * g.cell_volume();
}

// int e_eps(t) G_{z0} dx over the box for one snapshot.
double slice_integral(const QField& snap, const MaterialParams& p, const ParabolicPoint& z0) {
    std::vector<double> e;
    energy_density(snap, p, e);
    return kernel_weighted_sum(snap.grid, e, snap.time, z0, p);
}

}  // namespace

double phi_functional(const StoredRun& run, const ParabolicPoint& z0, double R) {
    const double ts = z0.t - R * R;
    const double tol = 1.0000001 * std::max(run.max_gap(), 1e-300);
    // snap to the nearest snapshot strictly before t0 (backward kernel domain)
    std::size_t best = run.snapshots.size();
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
        if (!(run.snapshots[i].time < z0.t)) continue;
        const double d = std::abs(run.snapshots[i].time - ts);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    if (best == run.snapshots.size() || bd > tol)
        throw NeedsSnapshot("phi_functional: no snapshot within " + std::to_string(tol) +
                                " of the slice time t = " + std::to_string(ts),
                            ts);
    return R * R * slice_integral(run.snapshots[best], run.params, z0);
}

double psi_functional(const StoredRun& run, const ParabolicPoint& z0, double R) {
    const double lo = z0.t - 4.0 * R * R;
    const double hi = z0.t - R * R;
    // snapshot times clipped to the slab; boundary segments interpolated
    std::vector<std::pair<double, double>> samples;  // (t, I(t))
    for (const QField& s : run.snapshots) {
        if (s.time >= lo - run.max_gap() && s.time <= hi + run.max_gap() &&
            s.time < z0.t)
            samples.emplace_back(s.time, slice_integral(s, run.params, z0));
    }
    if (samples.size() < 2)
        throw NeedsSnapshot("psi_functional: slab contains too few snapshots", lo);
    double acc = 0.0;
    bool any = false;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        double t0 = samples[i - 1].first, t1 = samples[i].first;
        double i0 = samples[i - 1].second, i1 = samples[i].second;
        if (t1 <= lo || t0 >= hi) continue;
        const double c0 = std::max(t0, lo), c1 = std::min(t1, hi);
        if (c1 <= c0) continue;
        const double slope = (i1 - i0) / (t1 - t0);
        const double j0 = i0 + slope * (c0 - t0);
        const double j1 = i0 + slope * (c1 - t0);
        acc += 0.5 * (j0 + j1) * (c1 - c0);
        any = true;
    }
    if (!any) throw NeedsSnapshot("psi_functional: no snapshots inside the slab", lo);
    return acc;
}

double psi_via_phi(const StoredRun& run, const ParabolicPoint& z0, double R, int npts) {
    // Psi(R) = 2 int_R^{2R} Phi(r)/r dr, composite trapezoid in r.
    const double dr = R / (npts - 1);
    double acc = 0.0;
    double prev = phi_functional(run, z0, R) / R;
    for (int k = 1; k < npts; ++k) {
        const double r = R + k * dr;
        const double cur = phi_functional(run, z0, r) / r;
        acc += 0.5 * (prev + cur) * dr;
        prev = cur;
    }
    return 2.0 * acc;
}

MonotonicityAccumulator::MonotonicityAccumulator(const Grid& g, const MaterialParams& p,
                                                 const ParabolicPoint& z0,
                                                 std::vector<double> R_ladder)
    : grid_(g), p_(p), z0_(z0), R_(std::move(R_ladder)) {
    acc_.resize(R_.size());
    for (std::size_t i = 0; i < R_.size(); ++i) {
        acc_[i].slice_t = z0.t - R_[i] * R_[i];
        acc_[i].slab_lo = z0.t - 4.0 * R_[i] * R_[i];
        acc_[i].slab_hi = acc_[i].slice_t;
        acc_[i].best_dt = std::numeric_limits<double>::infinity();
    }
}

double MonotonicityAccumulator::weighted_sum(double t, const std::vector<double>& density) const {
    if (!(t < z0_.t)) return 0.0;
    return kernel_weighted_sum(grid_, density, t, z0_, p_);
}

void MonotonicityAccumulator::observe(double t, const std::vector<double>& density) {
    if (!(t < z0_.t)) return;
    // One kernel-weighted integral serves every R: Phi(R) = R^2 I(t0 - R^2)
    // and Psi(R) integrates I over the slab.
    const double I = weighted_sum(t, density);
    for (std::size_t i = 0; i < R_.size(); ++i) {
        PerR& a = acc_[i];
        const double dt_slice = std::abs(t - a.slice_t);
        if (dt_slice < a.best_dt) {
            if (a.have_phi) {
                a.phi_other = a.phi;
                a.have_other = true;
            }
            a.best_dt = dt_slice;
            a.phi = R_[i] * R_[i] * I;
            a.have_phi = true;
        } else if (a.have_phi && !a.have_other) {
            a.phi_other = R_[i] * R_[i] * I;
            a.have_other = true;
        }
        if (have_prev_) {
            const double t0 = prev_t_, t1 = t;
            if (t1 > a.slab_lo && t0 < a.slab_hi) {
                const double c0 = std::max(t0, a.slab_lo), c1 = std::min(t1, a.slab_hi);
                if (c1 > c0) {
                    const double slope = (I - prev_I_) / (t1 - t0);
                    const double j0 = prev_I_ + slope * (c0 - t0);
                    const double j1 = prev_I_ + slope * (c1 - t0);
                    a.psi += 0.5 * (j0 + j1) * (c1 - c0);
                    if (c0 != t0 || c1 != t1)
                        a.edge_err += std::abs(I - prev_I_) * (c1 - c0);
                }
            }
        }
    }
    prev_t_ = t;
    prev_I_ = I;
    have_prev_ = true;
}

std::vector<MonotonicityAccumulator::Row> MonotonicityAccumulator::rows() const {
    std::vector<Row> out;
    for (std::size_t i = 0; i < R_.size(); ++i) {
        Row r;
        r.R = R_[i];
        r.Phi = acc_[i].phi;
        r.Psi = acc_[i].psi;
        r.phi_snap_err = acc_[i].have_other ? std::abs(acc_[i].phi - acc_[i].phi_other) : 0.0;
        r.psi_edge_err = acc_[i].edge_err;
        out.push_back(r);
    }
    return out;
}

BochnerResult bochner_ratio(const QField& q_prev, const QField& q_mid, const QField& q_next,
                            const MaterialParams& p, double eps0, double floor) {
    BochnerResult res;
    const Grid& g = q_mid.grid;
    const std::size_t n = g.cells();

    for (const QField* f : {&q_prev, &q_mid, &q_next})
        for (std::size_t i = 0; i < n; ++i)
            res.sup_dist = std::max(res.sup_dist, dist_to_N(f->at(i), p));
    res.hypothesis_met = res.sup_dist < eps0;
    if (!res.hypothesis_met) return res;

    std::vector<double> e_prev, e_mid, e_next;
    energy_density(q_prev, p, e_prev);
    energy_density(q_mid, p, e_mid);
    energy_density(q_next, p, e_next);
    const double dt = 0.5 * (q_next.time - q_prev.time);

    // Laplacian of the mid energy density (scalar stencil).
    ScalarField ef(g);
    ef.ch[0] = e_mid;
    ScalarField lap_e(g);
    {
        kernels::StencilDims d;
        d.nx = g.n[0];
        d.ny = g.n[1];
        d.nz = g.n[2];
        d.wx = g.n[0] > 1 ? 1.0 / (g.spacing(0) * g.spacing(0)) : 0.0;
        d.wy = g.n[1] > 1 ? 1.0 / (g.spacing(1) * g.spacing(1)) : 0.0;
        d.wz = g.n[2] > 1 ? 1.0 / (g.spacing(2) * g.spacing(2)) : 0.0;
        kernels::laplacian(kernels::active(), ef.ch[0].data(), lap_e.ch[0].data(), d, 0,
                           g.n[1] * g.n[2]);
    }

    const double inv_e2g2 = 1.0 / (p.eps * p.eps * p.Gamma * p.Gamma);
    const double diff = p.L1 / p.Gamma;
    res.ratio.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dte = (e_next[i] - e_prev[i]) / (2.0 * dt);
        const QTensor j = bulk_force_J(q_mid.at(i), p);
        const double lhs = dte - diff * lap_e.ch[0][i] + inv_e2g2 * norm_sq(j);
        res.ratio[i] = lhs / std::max(e_mid[i] * e_mid[i], floor);
    }
    res.sup_ratio = *std::max_element(res.ratio.begin(), res.ratio.end());
    return res;
}

DirectorField lift_director(const QField& q, const MaterialParams& p, double gap_tol) {
    (void)p;
    const Grid& g = q.grid;
    const std::size_t n = g.cells();
    std::vector<Vec3> top(n);
    std::vector<double> gap(n);
    std::vector<std::size_t> offenders;
    for (std::size_t i = 0; i < n; ++i) {
        const EigenDecomposition eig = eig_sym3(q.at(i));
        top[i] = eig.n[0];
        gap[i] = eig.gap();
        if (!(gap[i] >= gap_tol)) offenders.push_back(i);
    }
    if (!offenders.empty())
        throw DegenerateProjection("lift_director: " + std::to_string(offenders.size()) +
                                       " cells below the eigenvalue-gap tolerance "
                                       "(candidate singular points)",
                                   offenders);

    // Orient from the cell of maximal gap (first index wins ties), BFS,
    // sign chosen to match the already-oriented parent.
    std::size_t seed = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (gap[i] > gap[seed]) seed = i;

    DirectorField out(g, q.time);
    std::vector<char> visited(n, 0);
    std::deque<std::size_t> queue;
    out.set(seed, top[seed]);
    visited[seed] = 1;
    queue.push_back(seed);
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const Vec3 ncur = out.at(cur);
        for (int a = 0; a < g.dim; ++a) {
            for (int dir : {-1, +1}) {
                const std::size_t nb = shift_index(g, cur, a, dir);
                if (!visited[nb]) {
                    const double d = dot(ncur, top[nb]);
                    out.set(nb, d < 0.0 ? scaled(top[nb], -1.0) : top[nb]);
                    visited[nb] = 1;
                    queue.push_back(nb);
                } else if (dot(ncur, out.at(nb)) < 0.0) {
                    throw OrientationError(
                        "lift_director: orientation frustration between cells " +
                            std::to_string(cur) + " and " + std::to_string(nb) +
                            " (non-orientable line field)",
                        cur, nb);
                }
            }
        }
    }
    return out;
}

namespace {

LimitResidual limit_residual_impl(const QField& q_old, const QField& q_new,
                                  const MaterialParams& p, double gap_tol, bool lenient) {
    const Grid& g = q_new.grid;
    const std::size_t n = g.cells();
    const double dt = q_new.time - q_old.time;
    if (!(dt > 0.0)) throw InvalidInput("limit_residual: need q_new.time > q_old.time");

    QField mid(g, 0.5 * (q_old.time + q_new.time));
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t i = 0; i < n; ++i)
            mid.ch[c][i] = 0.5 * (q_old.ch[c][i] + q_new.ch[c][i]);
    QField lap(g);
    laplacian_field(mid, lap);

    const double diff = p.L1 / p.Gamma;
    const double vol = g.cell_volume();
    LimitResidual res;
    res.lambda.assign(n, 0.0);
    std::vector<std::size_t> offenders;
    double tangent_sq = 0.0, lambda_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        QTensor w;
        for (std::size_t c = 0; c < 5; ++c)
            w.comp(c) = (q_new.ch[c][i] - q_old.ch[c][i]) / dt - diff * lap.ch[c][i];
        const EigenDecomposition eig = eig_sym3(mid.at(i));
        if (!(eig.gap() >= gap_tol)) {
            offenders.push_back(i);
            continue;
        }
        const FrameAtQ frame = FrameAtQ::from_axes(eig.n[1], eig.n[2], eig.n[0]);
        const TangentNormalCoeffs c = decompose_at_N(w, frame);
        tangent_sq += c.tangent_norm_sq() * vol;
        const double lam = std::sqrt(c.normal_norm_sq());
        res.lambda[i] = lam;
        lambda_sq += lam * lam * vol;
        res.lambda_sup = std::max(res.lambda_sup, lam);
    }
    if (!lenient && !offenders.empty())
        throw DegenerateProjection("limit_residual: projection degenerate at " +
                                       std::to_string(offenders.size()) + " cells",
                                   offenders);
    res.tangent_norm = std::sqrt(tangent_sq);
    res.lambda_L2 = std::sqrt(lambda_sq);
    return res;
}

}  // namespace

LimitResidual limit_residual(const QField& q_old, const QField& q_new,
                             const MaterialParams& p, double gap_tol) {
    return limit_residual_impl(q_old, q_new, p, gap_tol, false);
}

LimitResidual limit_residual_lenient(const QField& q_old, const QField& q_new,
                                     const MaterialParams& p, double gap_tol) {
    return limit_residual_impl(q_old, q_new, p, gap_tol, true);
}

std::vector<ParabolicPoint> singular_set_scan(const StoredRun& run,
                                              const std::vector<double>& R_ladder,
                                              double eps1, std::size_t stride) {
    std::vector<ParabolicPoint> flagged;
    if (run.snapshots.empty() || R_ladder.empty()) return flagged;
    const Grid& g = run.grid;
    double rmax = 0.0;
    for (double r : R_ladder) rmax = std::max(rmax, r);
    const double t_first = run.snapshots.front().time;

    // density per snapshot cached once; slab integrals reuse it per z0
    std::vector<std::vector<double>> density(run.snapshots.size());
    for (std::size_t i = 0; i < run.snapshots.size(); ++i)
        energy_density(run.snapshots[i], run.params, density[i]);

    std::vector<double> memo(run.snapshots.size());
    std::vector<char> have(run.snapshots.size());
    const auto I_at = [&](std::size_t i, const ParabolicPoint& z0) {
        if (!have[i]) {
            memo[i] = kernel_weighted_sum(g, density[i], run.snapshots[i].time, z0,
                                          run.params);
            have[i] = 1;
        }
        return memo[i];
    };
    const auto slab_energy = [&](const ParabolicPoint& z0, double R) {
        const double lo = z0.t - 4.0 * R * R;
        const double hi = z0.t - R * R;
        double acc = 0.0;
        bool any = false;
        for (std::size_t i = 1; i < run.snapshots.size(); ++i) {
            const double t0 = run.snapshots[i - 1].time;
            const double t1 = run.snapshots[i].time;
            if (t1 <= lo || t0 >= hi || t1 >= z0.t) continue;
            const double c0 = std::max(t0, lo), c1 = std::min(t1, hi);
            if (c1 <= c0) continue;
            const double i0 = I_at(i - 1, z0);
            const double i1 = I_at(i, z0);
            const double slope = (i1 - i0) / (t1 - t0);
            acc += 0.5 * ((i0 + slope * (c0 - t0)) + (i0 + slope * (c1 - t0))) * (c1 - c0);
            any = true;
        }
        if (!any) throw NeedsSnapshot("singular_set_scan: slab uncovered", lo);
        return acc;
    };

    for (std::size_t si = 0; si < run.snapshots.size(); si += stride) {
        const double t0 = run.snapshots[si].time;
        if (t0 - 4.0 * rmax * rmax < t_first) continue;  // slab not covered
        for (std::size_t iz = 0; iz < g.n[2]; iz += (g.dim >= 3 ? stride : 1)) {
            for (std::size_t iy = 0; iy < g.n[1]; iy += (g.dim >= 2 ? stride : 1)) {
                for (std::size_t ix = 0; ix < g.n[0]; ix += stride) {
                    ParabolicPoint z0;
                    z0.x = g.position(g.index(ix, iy, iz));
                    z0.t = t0;
                    std::fill(have.begin(), have.end(), 0);  // memo is per z0
                    bool all = true;
                    for (double R : R_ladder) {
                        double psi;
                        try {
                            psi = slab_energy(z0, R);
                        } catch (const NeedsSnapshot&) {
                            all = false;
                            break;
                        }
                        if (!(psi >= eps1)) {
                            all = false;
                            break;
                        }
                    }
                    if (all) flagged.push_back(z0);
                }
            }
        }
    }
    return flagged;
}

void harmonic_residual_field(const DirectorField& n_old, const DirectorField& n_new,
                             std::vector<Vec3>& out) {
    const Grid& g = n_new.grid;
    const std::size_t n = g.cells();
    const double dt = n_new.time - n_old.time;
    if (!(dt > 0.0)) throw InvalidInput("harmonic_residual: need n_new.time > n_old.time");
    DirectorField mid(g);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < n; ++i)
            mid.ch[c][i] = 0.5 * (n_old.ch[c][i] + n_new.ch[c][i]);
    DirectorField lap(g);
    laplacian_field(mid, lap);
    std::vector<double> gsq;
    director_grad_sq(mid, gsq);
    out.assign(n, Vec3{0, 0, 0});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c)
            out[i][c] = (n_new.ch[c][i] - n_old.ch[c][i]) / dt - lap.ch[c][i] -
                        gsq[i] * mid.ch[c][i];
}

double harmonic_residual(const DirectorField& n_old, const DirectorField& n_new) {
    std::vector<Vec3> r;
    harmonic_residual_field(n_old, n_new, r);
    const double vol = n_new.grid.cell_volume();
    double acc = 0.0;
    for (const Vec3& v : r) acc += dot(v, v) * vol;
    return std::sqrt(acc);
}

DiagnosticsRecord make_record(const QField& cur, const QField* prev,
                              const MaterialParams& p, double cum_prev, double gap_tol) {
    DiagnosticsRecord rec;
    rec.time = cur.time;
    const EnergyBreakdown e = total_energy(cur, p);
    rec.E_dirichlet = e.dirichlet;
    rec.E_bulk = e.bulk;
    rec.E_total = e.total();
    const std::size_t n = cur.cells();
    for (std::size_t i = 0; i < n; ++i) {
        const QTensor q = cur.at(i);
        rec.sup_absQ = std::max(rec.sup_absQ, norm(q));
        rec.sup_distN = std::max(rec.sup_distN, dist_to_N(q, p));
    }
    rec.cum_dtQ_sq = cum_prev;
    if (prev != nullptr && cur.time > prev->time) {
        const double dt = cur.time - prev->time;
        const double vol = cur.grid.cell_volume();
        double dsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const QTensor d = cur.at(i) - prev->at(i);
            dsq += norm_sq(d) / (dt * dt) * vol;
        }
        rec.cum_dtQ_sq += dsq * dt;  // midpoint value of |d_t Q|^2 times the interval
        const LimitResidual lr = limit_residual_lenient(*prev, cur, p, gap_tol);
        rec.tangent_residual = lr.tangent_norm;
        rec.lambda_L2 = lr.lambda_L2;
        rec.lambda_sup = lr.lambda_sup;
    }
    return rec;
}

}  // namespace qflow
