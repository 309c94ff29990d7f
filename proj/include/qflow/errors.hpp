#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qflow {

// Exit-code contract used by the CLI: 0 ok, 1 assertion failure,
// 2 usage/config error, 3 numerical blow-up.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad values fed to an operation (non-finite input, non-unit director, ...).
struct InvalidInput : Error {
    using Error::Error;
};

// Config file / CLI usage problems; carries file/line context when known.
struct ConfigError : Error {
    using Error::Error;
};

// Nearest-point projection onto N is not unique (eigenvalue gap below tol).
struct DegenerateProjection : Error {
    DegenerateProjection(const std::string& what, std::vector<std::size_t> cells = {})
        : Error(what), offending_cells(std::move(cells)) {}
    std::vector<std::size_t> offending_cells;
};

// A closed loop of cells forces a director sign flip (non-orientable line field).
struct OrientationError : Error {
    OrientationError(const std::string& what, std::size_t a, std::size_t b)
        : Error(what), cell_a(a), cell_b(b) {}
    std::size_t cell_a, cell_b;
};

// lemma24_ratio at dist(Q, N) = 0.
struct UndefinedRatio : Error {
    using Error::Error;
};

// Heat-kernel evaluation at t >= t0.
struct DomainError : Error {
    using Error::Error;
};

// Slice/slab functional asked for a time not covered by stored snapshots.
struct NeedsSnapshot : Error {
    NeedsSnapshot(const std::string& what, double t) : Error(what), required_time(t) {}
    double required_time;
};

// Non-finite field value produced during stepping.
struct BlowupError : Error {
    BlowupError(const std::string& what, std::size_t cell, double t)
        : Error(what), cell(cell), time(t) {}
    std::size_t cell;
    double time;
};

struct UnknownSuite : Error {
    using Error::Error;
};

}  // namespace qflow
