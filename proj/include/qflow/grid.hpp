#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "qflow/errors.hpp"

namespace qflow {

/// Periodic rectangular grid, d in {1,2,3}. Cell centers at x_i = i*h.
/// Inactive axes have extent 1 and length 0.
struct Grid {
    int dim = 2;
    std::array<std::size_t, 3> n = {1, 1, 1};
    std::array<double, 3> length = {0.0, 0.0, 0.0};

    Grid() = default;
    Grid(int d, std::array<std::size_t, 3> cells, std::array<double, 3> len)
        : dim(d), n(cells), length(len) {
        validate();
    }

    void validate() const {
        if (dim < 1 || dim > 3) throw InvalidInput("Grid: dim must be 1, 2 or 3");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 4) throw InvalidInput("Grid: need at least 4 cells per active axis");
            if (!(length[a] > 0.0)) throw InvalidInput("Grid: box length must be > 0");
        }
        for (int a = dim; a < 3; ++a)
            if (n[a] != 1) throw InvalidInput("Grid: inactive axes must have extent 1");
    }

    double spacing(int axis) const { return length[axis] / static_cast<double>(n[axis]); }
    std::size_t cells() const { return n[0] * n[1] * n[2]; }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= spacing(a);
        return v;
    }

    std::size_t stride(int axis) const {
        switch (axis) {
            case 0: return 1;
            case 1: return n[0];
            default: return n[0] * n[1];
        }
    }

    std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
        return (iz * n[1] + iy) * n[0] + ix;
    }

    std::array<std::size_t, 3> coords(std::size_t idx) const {
        const std::size_t ix = idx % n[0];
        const std::size_t iy = (idx / n[0]) % n[1];
        const std::size_t iz = idx / (n[0] * n[1]);
        return {ix, iy, iz};
    }

    std::array<double, 3> position(std::size_t idx) const {
        const auto c = coords(idx);
        return {static_cast<double>(c[0]) * spacing(0),
                dim >= 2 ? static_cast<double>(c[1]) * spacing(1) : 0.0,
                dim >= 3 ? static_cast<double>(c[2]) * spacing(2) : 0.0};
    }

    bool compatible(const Grid& o) const {
        return dim == o.dim && n == o.n && length == o.length;
    }
};

}  // namespace qflow
