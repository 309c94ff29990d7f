#include "qflow/fields.hpp"

#include <algorithm>
#include <cmath>

namespace qflow {

double DirectorField::max_unit_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < cells(); ++i) {
        const Vec3 v = at(i);
        worst = std::max(worst, std::abs(norm(v) - 1.0));
    }
    return worst;
}

}  // namespace qflow
