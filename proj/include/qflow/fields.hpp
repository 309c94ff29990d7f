#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qflow/grid.hpp"
#include "qflow/qtensor.hpp"

namespace qflow {

/// Multi-channel scalar field over a grid, structure-of-arrays layout:
/// channel(c) is one contiguous row-major array over cells.
template <std::size_t NCh>
struct CellField {
    Grid grid;
    double time = 0.0;
    std::array<std::vector<double>, NCh> ch;

    CellField() = default;
    explicit CellField(const Grid& g, double t = 0.0) : grid(g), time(t) {
        for (auto& v : ch) v.assign(g.cells(), 0.0);
    }

    std::size_t cells() const { return grid.cells(); }

    std::array<double*, NCh> data() {
        std::array<double*, NCh> p;
        for (std::size_t c = 0; c < NCh; ++c) p[c] = ch[c].data();
        return p;
    }
    std::array<const double*, NCh> data() const {
        std::array<const double*, NCh> p;
        for (std::size_t c = 0; c < NCh; ++c) p[c] = ch[c].data();
        return p;
    }

    bool finite_at(std::size_t i) const {
        for (std::size_t c = 0; c < NCh; ++c)
            if (!std::isfinite(ch[c][i])) return false;
        return true;
    }
};

/// Field of QTensors (five components per cell).
struct QField : CellField<5> {
    QField() = default;
    explicit QField(const Grid& g, double t = 0.0) : CellField<5>(g, t) {}

    QTensor at(std::size_t i) const {
        return QTensor(ch[0][i], ch[1][i], ch[2][i], ch[3][i], ch[4][i]);
    }
    void set(std::size_t i, const QTensor& q) {
        for (std::size_t c = 0; c < 5; ++c) ch[c][i] = q.comp(c);
    }
};

/// Field of unit 3-vectors.
struct DirectorField : CellField<3> {
    DirectorField() = default;
    explicit DirectorField(const Grid& g, double t = 0.0) : CellField<3>(g, t) {}

    Vec3 at(std::size_t i) const { return {ch[0][i], ch[1][i], ch[2][i]}; }
    void set(std::size_t i, const Vec3& v) {
        ch[0][i] = v[0];
        ch[1][i] = v[1];
        ch[2][i] = v[2];
    }

    /// Largest deviation of |n| from 1 over all cells.
    double max_unit_defect() const;
};

using ScalarField = CellField<1>;

}  // namespace qflow
