#pragma once

#include <cstdint>
#include <string>

#include "qflow/fields.hpp"
#include "qflow/kernels.hpp"
#include "qflow/manifold.hpp"

namespace qflow {

enum class Scheme { explicit_euler, rk2, strang_split };

Scheme scheme_from_string(const std::string& s);
const char* scheme_name(Scheme s);

struct SolverConfig {
    double dt = 0.0;  // 0 = auto (largest stable step)
    Scheme scheme = Scheme::strang_split;
    double t_end = 0.1;
    double snapshot_dt = 1e-3;
    bool drift_correction = false;
};

/// Componentwise periodic 5-point/7-point Laplacian of the whole field.
void laplacian_field(const QField& in, QField& out);
void laplacian_field(const DirectorField& in, DirectorField& out);

/// Laplacian at a single cell (same stencil as the field kernel).
QTensor laplacian_at(const QField& f, std::size_t cell);

/// RHS of the relaxed flow: -J(Q)/(eps Gamma) + (L1/Gamma) Lap Q, cellwise.
void q_flow_rhs(const QField& q, const MaterialParams& p, QField& rhs);
QField q_flow_rhs(const QField& q, const MaterialParams& p);

/// Sampled bound on the Lipschitz constant of J over the invariant ball
/// {|Q| <= sqrt(2/3) s+ (1+margin)}; deterministic (fixed seed).
double estimate_bulk_lipschitz(const MaterialParams& p, double margin = 0.1);

/// Largest admissible dt for the scheme: 0.9 * min(eps*Gamma/kappa_bulk,
/// diffusion bound); Strang splitting is limited by diffusion only.
double stability_bound(const Grid& g, const MaterialParams& p, Scheme scheme);

/// Explicit diffusion bound alone: 0.9 * Gamma / (2 L1 sum_a h_a^-2).
double diffusion_bound(const Grid& g, const MaterialParams& p);

/// Time stepper for the relaxed Q-tensor flow. Holds work buffers; one
/// instance per run. Throws ConfigError if cfg.dt violates the stability
/// bound and BlowupError (with cell and time) if a step produces a
/// non-finite value.
class QFlowStepper {
  public:
    QFlowStepper(const Grid& g, const MaterialParams& p, const SolverConfig& cfg);

    void step(QField& f);
    double dt() const { return dt_; }
    double kappa_bulk() const { return kappa_; }

  private:
    void bulk_half_step(QField& f, double half_dt);
    void bulk_rhs(const QField& f, QField& out);  // -J(Q)/(eps Gamma)
    void check_finite(const QField& f) const;

    MaterialParams p_;
    SolverConfig cfg_;
    double dt_ = 0.0;
    double kappa_ = 0.0;
    QField k1_, k2_, k3_, k4_, tmp_, lap_;
};

/// Single-step convenience wrapper (builds a stepper internally).
QField step_q_flow(const QField& f, const MaterialParams& p, const SolverConfig& cfg);

/// Harmonic map heat flow dn/dt = Lap n + |grad n|^2 n with pointwise
/// renormalization after each step. Stability: dt <= 0.9 / (2 sum_a h_a^-2).
class HarmonicMapStepper {
  public:
    HarmonicMapStepper(const Grid& g, const SolverConfig& cfg);

    void step(DirectorField& f);
    double dt() const { return dt_; }

  private:
    SolverConfig cfg_;
    double dt_ = 0.0;
    DirectorField lap_;
    std::vector<double> gradsq_;
};

DirectorField step_harmonic_map(const DirectorField& f, const SolverConfig& cfg);

/// |grad n|^2 by central differences, written into out (resized).
void director_grad_sq(const DirectorField& f, std::vector<double>& out);

/// Q0 = s+ (n0 (x) n0 - Id/3) cellwise; directors must be unit.
QField initial_from_director(const DirectorField& n, const MaterialParams& p);

/// n(x) = (cos(2 pi m x_axis / L_axis), sin(...), 0); m integer keeps it periodic.
DirectorField initial_circle_map(const Grid& g, int m, int axis);

/// Unit-normalized b + amplitude * w(x) with w a smooth seeded random field
/// (low-wavenumber Fourier modes); amplitude 0 gives the constant field.
DirectorField initial_perturbed_constant(const Grid& g, double amplitude, std::uint64_t seed,
                                         const Vec3& base = {0.0, 0.0, 1.0});

/// Circle map tilted by a smooth seeded random field and renormalized.
DirectorField initial_perturbed_circle_map(const Grid& g, int m, int axis, double amplitude,
                                           std::uint64_t seed);

DirectorField initial_constant(const Grid& g, const Vec3& dir);

}  // namespace qflow
