#pragma once

#include <string>
#include <vector>

#include "qflow/diagnostics.hpp"
#include "qflow/fields.hpp"
#include "qflow/manifold.hpp"

namespace qflow {

/// QFLD1 snapshot format, little-endian:
///   bytes 0..4  magic "QFLD1"
///   byte  5     payload kind: 'Q' (5 components/cell) or 'D' (3 components)
///   bytes 6..7  zero padding
///   u64 dimension, then dim * u64 axis sizes, dim * f64 box lengths,
///   f64 time, eps, a, b, c, L1, Gamma,
/// then row-major cell data, components contiguous per cell, f64.
/// Round-trips are bit-exact.
void write_qfld(const std::string& path, const QField& f, const MaterialParams& p);
void write_qfld(const std::string& path, const DirectorField& f, const MaterialParams& p);

struct QfldFile {
    char kind = 'Q';
    MaterialParams params;
    QField q;          // valid when kind == 'Q'
    DirectorField dir; // valid when kind == 'D'
};
QfldFile read_qfld(const std::string& path);

/// One double with 17 significant digits (lossless decimal round-trip).
std::string format_g17(double v);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& rows);
std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::string& path);

struct MonotonicityRow {
    ParabolicPoint z0;
    double R = 0.0, Phi = 0.0, Psi = 0.0;
};
void write_monotonicity_csv(const std::string& path, const std::vector<MonotonicityRow>& rows);

}  // namespace qflow
