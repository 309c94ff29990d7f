#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "qflow/fields.hpp"
#include "qflow/manifold.hpp"

namespace qflow {

/// Point of space-time; parabolic cylinders/slices/slabs hang off it.
struct ParabolicPoint {
    std::array<double, 3> x = {0.0, 0.0, 0.0};
    double t = 0.0;
};

/// Per-snapshot scalar diagnostics. E_total = E_dirichlet + E_bulk exactly.
struct DiagnosticsRecord {
    double time = 0.0;
    double E_total = 0.0;
    double E_dirichlet = 0.0;
    double E_bulk = 0.0;
    double sup_absQ = 0.0;
    double sup_distN = 0.0;
    double cum_dtQ_sq = 0.0;
    double tangent_residual = 0.0;
    double lambda_L2 = 0.0;
    double lambda_sup = 0.0;
};

/// |grad Q|^2 = d_a Q_ij d_a Q_ij cellwise, central differences, all nine
/// matrix entries (zz reconstructed).
void q_grad_sq(const QField& q, std::vector<double>& out);

/// Staggered (forward-edge) form of |grad Q|^2, each edge assigned to its
/// left cell. This is the Dirichlet energy whose gradient flow the 3-point
/// Laplacian is, so the discrete energy identity holds against it exactly.
void q_grad_sq_staggered(const QField& q, std::vector<double>& out);

/// e_eps = f~_B/(eps Gamma) + (L1/2Gamma)|grad Q|^2 cellwise.
void energy_density(const QField& q, const MaterialParams& p, std::vector<double>& out);

/// Box totals for the run records; the Dirichlet part uses the staggered
/// gradient so the dissipation inequality is tight against the scheme.
struct EnergyBreakdown {
    double dirichlet = 0.0;
    double bulk = 0.0;
    double total() const { return dirichlet + bulk; }
};
EnergyBreakdown total_energy(const QField& q, const MaterialParams& p);

/// Scaled backward heat kernel G_{z0}(x, t) on free R^dim (default dim = 3).
/// Throws DomainError for t >= z0.t.
double scaled_heat_kernel(const std::array<double, 3>& x, double t, const ParabolicPoint& z0,
                          const MaterialParams& p, int dim = 3);

/// Same kernel summed over periodic images of the box, per-axis tails below
/// 1e-13 relative; kernel dimension = grid dimension.
double periodic_heat_kernel(const Grid& g, const std::array<double, 3>& x, double t,
                            const ParabolicPoint& z0, const MaterialParams& p);

/// Time-ordered snapshots of one run.
struct StoredRun {
    Grid grid;
    MaterialParams params;
    std::vector<QField> snapshots;

    std::size_t nearest_index(double t) const;
    /// Largest gap between consecutive snapshot times.
    double max_gap() const;
    /// Snapshot within tol of t; throws NeedsSnapshot otherwise.
    const QField& at_time(double t, double tol) const;
};

/// Phi(R) = (R^2/Gamma) int_{S_R(z0)} [L1/2 |grad Q|^2 + f~_B/eps] G dx,
/// slice snapped to the nearest stored snapshot.
double phi_functional(const StoredRun& run, const ParabolicPoint& z0, double R);

/// Psi(R): same integrand over the slab t0-4R^2 < t < t0-R^2, trapezoid in
/// time over stored snapshots with clipped boundary segments.
double psi_functional(const StoredRun& run, const ParabolicPoint& z0, double R);

/// Psi via the identity Psi(R) = 2 int_R^{2R} r^-1 Phi(r) dr (independent
/// quadrature route for cross-checking).
double psi_via_phi(const StoredRun& run, const ParabolicPoint& z0, double R, int npts = 65);

/// In-run accumulator: feeds on every step, so Phi slices snap to the step
/// grid and Psi integrates at full step resolution.
class MonotonicityAccumulator {
  public:
    MonotonicityAccumulator(const Grid& g, const MaterialParams& p, const ParabolicPoint& z0,
                            std::vector<double> R_ladder);

    /// Call once per step (and once for the initial state). `density` is the
    /// cellwise e_eps of the field at time t.
    void observe(double t, const std::vector<double>& density);

    struct Row {
        double R = 0.0;
        double Phi = 0.0;
        double Psi = 0.0;
        double phi_snap_err = 0.0;  // |Phi(bracket) - Phi| across the slice target
        double psi_edge_err = 0.0;  // boundary-segment resolution estimate
    };
    std::vector<Row> rows() const;

    const ParabolicPoint& z0() const { return z0_; }

  private:
    double weighted_sum(double t, const std::vector<double>& density) const;

    Grid grid_;
    MaterialParams p_;
    ParabolicPoint z0_;
    std::vector<double> R_;
    struct PerR {
        double slice_t = 0.0, slab_lo = 0.0, slab_hi = 0.0;
        double best_dt = 0.0, phi = 0.0, phi_other = 0.0;
        bool have_phi = false, have_other = false;
        double psi = 0.0, edge_err = 0.0;
    };
    std::vector<PerR> acc_;
    double prev_t_ = 0.0, prev_I_ = 0.0;
    bool have_prev_ = false;
};

/// Bochner ratio field r = [(d_t - (L1/Gamma) Lap) e_eps + |J|^2/(eps Gamma)^2]
/// / max(e_eps^2, floor) from three consecutive snapshots. The near-N
/// hypothesis (sup dist < eps0 on the stencil) is reported, not asserted.
struct BochnerResult {
    bool hypothesis_met = false;
    double sup_dist = 0.0;
    std::vector<double> ratio;
    double sup_ratio = 0.0;
};
BochnerResult bochner_ratio(const QField& q_prev, const QField& q_mid, const QField& q_next,
                            const MaterialParams& p, double eps0, double floor = 1e-12);

/// Director lifting: top eigenvector per cell, sign propagated breadth-first
/// from the cell of maximal eigenvalue gap. Throws DegenerateProjection
/// (listing cells) on gap failure and OrientationError (with the frustrated
/// edge) on non-orientable line fields.
DirectorField lift_director(const QField& q, const MaterialParams& p, double gap_tol);

/// Decomposition of d_t Q - (L1/Gamma) Lap Q at pi_N(Q) into tangent and
/// normal parts; the normal magnitude per cell is the multiplier lambda.
struct LimitResidual {
    double tangent_norm = 0.0;  // L2 of the tangential part
    std::vector<double> lambda;
    double lambda_L2 = 0.0;
    double lambda_sup = 0.0;
};
LimitResidual limit_residual(const QField& q_old, const QField& q_new,
                             const MaterialParams& p, double gap_tol);

/// Lenient variant for run diagnostics: cells with eigenvalue gap below
/// gap_tol are skipped instead of throwing.
LimitResidual limit_residual_lenient(const QField& q_old, const QField& q_new,
                                     const MaterialParams& p, double gap_tol);

/// Sigma scan: z0 flagged when the slab energy int_{T_R} e_eps G dx dt stays
/// >= eps1 for every R in the ladder. Spatial candidates subsampled by stride.
std::vector<ParabolicPoint> singular_set_scan(const StoredRun& run,
                                              const std::vector<double>& R_ladder,
                                              double eps1, std::size_t stride = 4);

/// L2 norm of d_t n - Lap n - |grad n|^2 n from a consecutive-time pair.
double harmonic_residual(const DirectorField& n_old, const DirectorField& n_new);
/// Same residual cellwise (for sup-norm studies).
void harmonic_residual_field(const DirectorField& n_old, const DirectorField& n_new,
                             std::vector<Vec3>& out);

/// Assemble one diagnostics row; prev == nullptr for the first sample.
DiagnosticsRecord make_record(const QField& cur, const QField* prev,
                              const MaterialParams& p, double cum_prev, double gap_tol);

}  // namespace qflow
