#include "qflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qflow {

Scheme scheme_from_string(const std::string& s) {
    if (s == "explicit-euler") return Scheme::explicit_euler;
    if (s == "rk2") return Scheme::rk2;
    if (s == "strang-split") return Scheme::strang_split;
    throw ConfigError("unknown scheme '" + s + "' (explicit-euler | rk2 | strang-split)");
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::explicit_euler: return "explicit-euler";
        case Scheme::rk2: return "rk2";
        default: return "strang-split";
    }
}

namespace {

kernels::StencilDims stencil_dims(const Grid& g) {
    kernels::StencilDims d;
    d.nx = g.n[0];
    d.ny = g.n[1];
    d.nz = g.n[2];
    const double hx = g.dim >= 1 ? g.spacing(0) : 0.0;
    const double hy = g.dim >= 2 ? g.spacing(1) : 0.0;
    const double hz = g.dim >= 3 ? g.spacing(2) : 0.0;
    d.wx = (g.n[0] > 1) ? 1.0 / (hx * hx) : 0.0;
    d.wy = (g.n[1] > 1) ? 1.0 / (hy * hy) : 0.0;
    d.wz = (g.n[2] > 1) ? 1.0 / (hz * hz) : 0.0;
    return d;
}

template <std::size_t NCh>
void laplacian_channels(const CellField<NCh>& in, CellField<NCh>& out) {
    const auto d = stencil_dims(in.grid);
    const std::size_t rows = in.grid.n[1] * in.grid.n[2];
    const auto be = kernels::active();
    for (std::size_t c = 0; c < NCh; ++c) {
        const double* f = in.ch[c].data();
        double* o = out.ch[c].data();
        parallel_for(0, rows, [&](std::size_t rb, std::size_t re) {
            kernels::laplacian(be, f, o, d, rb, re);
        });
    }
}

double inv_h2_sum(const Grid& g) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        const double h = g.spacing(a);
        s += 1.0 / (h * h);
    }
    return s;
}

}  // namespace

void laplacian_field(const QField& in, QField& out) { laplacian_channels(in, out); }
void laplacian_field(const DirectorField& in, DirectorField& out) {
    laplacian_channels(in, out);
}

QTensor laplacian_at(const QField& f, std::size_t cell) {
    const Grid& g = f.grid;
    const auto c = g.coords(cell);
    QTensor acc;
    for (int a = 0; a < g.dim; ++a) {
        if (g.n[a] <= 1) continue;
        auto cm = c, cp = c;
        cm[a] = (c[a] == 0 ? g.n[a] - 1 : c[a] - 1);
        cp[a] = (c[a] + 1 == g.n[a] ? 0 : c[a] + 1);
        const std::size_t im = g.index(cm[0], cm[1], cm[2]);
        const std::size_t ip = g.index(cp[0], cp[1], cp[2]);
        const double w = 1.0 / (g.spacing(a) * g.spacing(a));
        acc += w * (f.at(im) + f.at(ip) - 2.0 * f.at(cell));
    }
    return acc;
}

void q_flow_rhs(const QField& q, const MaterialParams& p, QField& rhs) {
    laplacian_field(q, rhs);
    const double diff = p.L1 / p.Gamma;
    const double relax = -1.0 / (p.eps * p.Gamma);
    const auto be = kernels::active();
    const std::size_t n = q.cells();

    // rhs currently holds Lap Q; fold in the bulk force in one pass per chunk.
    thread_local std::array<std::vector<double>, 5> bf_buf;
    for (auto& v : bf_buf)
        if (v.size() < n) v.assign(n, 0.0);
    std::array<double*, 5> bf;
    for (std::size_t c = 0; c < 5; ++c) bf[c] = bf_buf[c].data();

    parallel_for(0, n, [&](std::size_t b, std::size_t e) {
        kernels::bulk_force(be, q.data(), bf, b, e, p.a, p.b, p.c);
        for (std::size_t c = 0; c < 5; ++c)
            kernels::lincomb(be, bf[c], relax, rhs.ch[c].data(), diff, rhs.ch[c].data(), b, e);
    });
}

QField q_flow_rhs(const QField& q, const MaterialParams& p) {
    QField rhs(q.grid, q.time);
    q_flow_rhs(q, p, rhs);
    return rhs;
}

double estimate_bulk_lipschitz(const MaterialParams& p, double margin) {
    const double radius = std::sqrt(2.0 / 3.0) * s_plus(p) * (1.0 + margin);
    std::mt19937_64 rng(0xA3C59AC3u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6 * radius;
    double worst = 0.0;
    for (int it = 0; it < 2000; ++it) {
        QTensor q, v;
        for (std::size_t c = 0; c < 5; ++c) {
            q.comp(c) = u(rng);
            v.comp(c) = u(rng);
        }
        const double nq = norm(q);
        if (nq > 0.0) q *= radius * std::cbrt(std::abs(u(rng))) / nq;
        const double nv = norm(v);
        if (nv == 0.0) continue;
        v *= 1.0 / nv;
        const QTensor dj = bulk_force_J(q + h * v, p) - bulk_force_J(q - h * v, p);
        worst = std::max(worst, norm(dj) / (2.0 * h));
    }
    return 1.25 * worst;
}

double diffusion_bound(const Grid& g, const MaterialParams& p) {
    return 0.9 * p.Gamma / (2.0 * p.L1 * inv_h2_sum(g));
}

double stability_bound(const Grid& g, const MaterialParams& p, Scheme scheme) {
    const double diff = diffusion_bound(g, p);
    if (scheme == Scheme::strang_split) return diff;
    const double kappa = estimate_bulk_lipschitz(p);
    return std::min(0.9 * p.eps * p.Gamma / kappa, diff);
}

QFlowStepper::QFlowStepper(const Grid& g, const MaterialParams& p, const SolverConfig& cfg)
    : p_(p), cfg_(cfg) {
    p.validate();
    g.validate();
    kappa_ = estimate_bulk_lipschitz(p);
    const double diff = diffusion_bound(g, p);
    const double bound = (cfg.scheme == Scheme::strang_split)
                             ? diff
                             : std::min(0.9 * p.eps * p.Gamma / kappa_, diff);
    dt_ = cfg.dt > 0.0 ? cfg.dt : bound;
    if (dt_ > bound * (1.0 + 1e-12))
        throw ConfigError("dt " + std::to_string(dt_) + " exceeds the stability bound " +
                          std::to_string(bound) + " for scheme " +
                          scheme_name(cfg.scheme));
    k1_ = QField(g);
    k2_ = QField(g);
    lap_ = QField(g);
    if (cfg.scheme == Scheme::strang_split) {
        k3_ = QField(g);
        k4_ = QField(g);
        tmp_ = QField(g);
    }
}

void QFlowStepper::bulk_rhs(const QField& f, QField& out) {
    // Writes J(Q); the -1/(eps Gamma) factor is folded into the RK weights.
    const auto be = kernels::active();
    parallel_for(0, f.cells(), [&](std::size_t b, std::size_t e) {
        kernels::bulk_force(be, f.data(), out.data(), b, e, p_.a, p_.b, p_.c);
    });
}

void QFlowStepper::bulk_half_step(QField& f, double half_dt) {
    // Pointwise ODE dQ/dt = -J(Q)/(eps Gamma), classic RK4 with substeps
    // sized by the sampled stiffness.
    const double tau_max = 0.5 * p_.eps * p_.Gamma / kappa_;
    const int nsub = std::max(1, static_cast<int>(std::ceil(half_dt / tau_max)));
    const double tau = -(half_dt / nsub) / (p_.eps * p_.Gamma);  // signed RK step
    const auto be = kernels::active();
    const std::size_t n = f.cells();
    for (int s = 0; s < nsub; ++s) {
        bulk_rhs(f, k1_);
        for (std::size_t c = 0; c < 5; ++c)
            parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                kernels::axpy(be, f.ch[c].data(), k1_.ch[c].data(), 0.5 * tau,
                              tmp_.ch[c].data(), b, e);
            });
        bulk_rhs(tmp_, k2_);
        for (std::size_t c = 0; c < 5; ++c)
            parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                kernels::axpy(be, f.ch[c].data(), k2_.ch[c].data(), 0.5 * tau,
                              tmp_.ch[c].data(), b, e);
            });
        bulk_rhs(tmp_, k3_);
        for (std::size_t c = 0; c < 5; ++c)
            parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                kernels::axpy(be, f.ch[c].data(), k3_.ch[c].data(), tau, tmp_.ch[c].data(),
                              b, e);
            });
        bulk_rhs(tmp_, k4_);
        const double w = tau / 6.0;
        for (std::size_t c = 0; c < 5; ++c) {
            double* fc = f.ch[c].data();
            const double* a1 = k1_.ch[c].data();
            const double* a2 = k2_.ch[c].data();
            const double* a3 = k3_.ch[c].data();
            const double* a4 = k4_.ch[c].data();
            parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i)
                    fc[i] += w * (a1[i] + 2.0 * (a2[i] + a3[i]) + a4[i]);
            });
        }
    }
}

void QFlowStepper::check_finite(const QField& f) const {
    const std::size_t n = f.cells();
    for (std::size_t i = 0; i < n; ++i)
        if (!f.finite_at(i))
            throw BlowupError("q-flow blow-up at cell " + std::to_string(i) + ", t = " +
                                  std::to_string(f.time),
                              i, f.time);
}

void QFlowStepper::step(QField& f) {
    const auto be = kernels::active();
    const std::size_t n = f.cells();
    switch (cfg_.scheme) {
        case Scheme::explicit_euler: {
            q_flow_rhs(f, p_, k1_);
            for (std::size_t c = 0; c < 5; ++c)
                parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                    kernels::axpy(be, f.ch[c].data(), k1_.ch[c].data(), dt_,
                                  f.ch[c].data(), b, e);
                });
            break;
        }
        case Scheme::rk2: {  // Heun
            q_flow_rhs(f, p_, k1_);
            for (std::size_t c = 0; c < 5; ++c)
                parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                    kernels::axpy(be, f.ch[c].data(), k1_.ch[c].data(), dt_,
                                  lap_.ch[c].data(), b, e);
                });
            q_flow_rhs(lap_, p_, k2_);
            for (std::size_t c = 0; c < 5; ++c) {
                double* fc = f.ch[c].data();
                const double* a1 = k1_.ch[c].data();
                const double* a2 = k2_.ch[c].data();
                const double hdt = 0.5 * dt_;
                parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i) fc[i] += hdt * (a1[i] + a2[i]);
                });
            }
            break;
        }
        case Scheme::strang_split: {
            bulk_half_step(f, 0.5 * dt_);
            laplacian_field(f, lap_);
            const double diff = dt_ * p_.L1 / p_.Gamma;
            for (std::size_t c = 0; c < 5; ++c)
                parallel_for(0, n, [&](std::size_t b, std::size_t e) {
                    kernels::axpy(be, f.ch[c].data(), lap_.ch[c].data(), diff,
                                  f.ch[c].data(), b, e);
                });
            bulk_half_step(f, 0.5 * dt_);
            break;
        }
    }
    f.time += dt_;
    // drift correction is a no-op under the 5-component representation
    check_finite(f);
}

QField step_q_flow(const QField& f, const MaterialParams& p, const SolverConfig& cfg) {
    QFlowStepper stepper(f.grid, p, cfg);
    QField out = f;
    stepper.step(out);
    return out;
}

HarmonicMapStepper::HarmonicMapStepper(const Grid& g, const SolverConfig& cfg) : cfg_(cfg) {
    g.validate();
    const double bound = 0.9 / (2.0 * inv_h2_sum(g));
    dt_ = cfg.dt > 0.0 ? cfg.dt : bound;
    if (dt_ > bound * (1.0 + 1e-12))
        throw ConfigError("harmonic map dt " + std::to_string(dt_) +
                          " exceeds the stability bound " + std::to_string(bound));
    lap_ = DirectorField(g);
    gradsq_.assign(g.cells(), 0.0);
}

void director_grad_sq(const DirectorField& f, std::vector<double>& out) {
    const Grid& g = f.grid;
    const std::size_t n = g.cells();
    out.assign(n, 0.0);
    for (int a = 0; a < g.dim; ++a) {
        if (g.n[a] <= 1) continue;
        const double inv2h = 1.0 / (2.0 * g.spacing(a));
        const std::size_t s = g.stride(a);
        const std::size_t na = g.n[a];
        parallel_for(0, n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t pos = (i / s) % na;
                const std::size_t im = (pos == 0) ? i + (na - 1) * s : i - s;
                const std::size_t ip = (pos + 1 == na) ? i - (na - 1) * s : i + s;
                double acc = 0.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    const double d = (f.ch[c][ip] - f.ch[c][im]) * inv2h;
                    acc += d * d;
                }
                out[i] += acc;
            }
        });
    }
}

void HarmonicMapStepper::step(DirectorField& f) {
    laplacian_field(f, lap_);
    director_grad_sq(f, gradsq_);
    const std::size_t n = f.cells();
    const double dt = dt_;
    parallel_for(0, n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double g = gradsq_[i];
            double v[3];
            for (std::size_t c = 0; c < 3; ++c)
                v[c] = f.ch[c][i] + dt * (lap_.ch[c][i] + g * f.ch[c][i]);
            const double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            for (std::size_t c = 0; c < 3; ++c) f.ch[c][i] = v[c] / nrm;
        }
    });
    f.time += dt_;
    for (std::size_t i = 0; i < n; ++i)
        if (!f.finite_at(i))
            throw BlowupError("harmonic flow blow-up at cell " + std::to_string(i) +
                                  ", t = " + std::to_string(f.time),
                              i, f.time);
}

DirectorField step_harmonic_map(const DirectorField& f, const SolverConfig& cfg) {
    HarmonicMapStepper stepper(f.grid, cfg);
    DirectorField out = f;
    stepper.step(out);
    return out;
}

QField initial_from_director(const DirectorField& n, const MaterialParams& p) {
    if (n.max_unit_defect() > 1e-12)
        throw InvalidInput("initial_from_director: directors must be unit vectors");
    const double sp = s_plus(p);
    QField q(n.grid, n.time);
    for (std::size_t i = 0; i < n.cells(); ++i) q.set(i, uniaxial(sp, n.at(i)));
    return q;
}

DirectorField initial_circle_map(const Grid& g, int m, int axis) {
    if (axis < 0 || axis >= g.dim) throw InvalidInput("circle_map: axis outside grid dim");
    DirectorField f(g);
    const double k = 2.0 * M_PI * m / g.length[axis];
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const auto x = g.position(i);
        f.set(i, {std::cos(k * x[axis]), std::sin(k * x[axis]), 0.0});
    }
    return f;
}

namespace {

// Smooth periodic random field: a few low-wavenumber Fourier modes per
// component, coefficients ~ 1/(1+|k|^2).
struct SmoothNoise {
    struct Mode {
        std::array<int, 3> k;
        std::array<double, 3> amp;
        std::array<double, 3> phase;
    };
    std::vector<Mode> modes;

    SmoothNoise(const Grid& g, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
        const int kmax = 2;
        std::array<int, 3> k = {0, 0, 0};
        for (k[0] = g.dim >= 1 ? -kmax : 0; k[0] <= (g.dim >= 1 ? kmax : 0); ++k[0])
            for (k[1] = g.dim >= 2 ? -kmax : 0; k[1] <= (g.dim >= 2 ? kmax : 0); ++k[1])
                for (k[2] = g.dim >= 3 ? -kmax : 0; k[2] <= (g.dim >= 3 ? kmax : 0); ++k[2]) {
                    if (k[0] == 0 && k[1] == 0 && k[2] == 0) continue;
                    Mode m;
                    m.k = k;
                    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    for (int c = 0; c < 3; ++c) {
                        m.amp[c] = gauss(rng) / (1.0 + k2);
                        m.phase[c] = uphase(rng);
                    }
                    modes.push_back(m);
                }
    }

    Vec3 eval(const Grid& g, const std::array<double, 3>& x) const {
        Vec3 v = {0.0, 0.0, 0.0};
        for (const auto& m : modes) {
            double arg = 0.0;
            for (int a = 0; a < g.dim; ++a)
                arg += 2.0 * M_PI * m.k[a] * x[a] / g.length[a];
            for (int c = 0; c < 3; ++c) v[c] += m.amp[c] * std::cos(arg + m.phase[c]);
        }
        return v;
    }
};

void normalize_field(DirectorField& f) {
    for (std::size_t i = 0; i < f.cells(); ++i) {
        Vec3 v = f.at(i);
        const double nrm = norm(v);
        if (!(nrm > 0.0))
            throw InvalidInput("director normalization hit a zero vector; "
                               "perturbation amplitude too large");
        f.set(i, scaled(v, 1.0 / nrm));
    }
}

}  // namespace

DirectorField initial_perturbed_constant(const Grid& g, double amplitude,
                                         std::uint64_t seed, const Vec3& base) {
    DirectorField f(g);
    const double bn = norm(base);
    if (!(bn > 0.0)) throw InvalidInput("perturbed_constant: zero base direction");
    const Vec3 b = scaled(base, 1.0 / bn);
    if (amplitude == 0.0) {
        for (std::size_t i = 0; i < g.cells(); ++i) f.set(i, b);
        return f;
    }
    SmoothNoise noise(g, seed);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Vec3 w = noise.eval(g, g.position(i));
        f.set(i, {b[0] + amplitude * w[0], b[1] + amplitude * w[1], b[2] + amplitude * w[2]});
    }
    normalize_field(f);
    return f;
}

DirectorField initial_perturbed_circle_map(const Grid& g, int m, int axis, double amplitude,
                                           std::uint64_t seed) {
    DirectorField f = initial_circle_map(g, m, axis);
    if (amplitude == 0.0) return f;
    SmoothNoise noise(g, seed);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Vec3 n = f.at(i);
        const Vec3 w = noise.eval(g, g.position(i));
        f.set(i, {n[0] + amplitude * w[0], n[1] + amplitude * w[1], n[2] + amplitude * w[2]});
    }
    normalize_field(f);
    return f;
}

DirectorField initial_constant(const Grid& g, const Vec3& dir) {
    return initial_perturbed_constant(g, 0.0, 0, dir);
}

}  // namespace qflow
