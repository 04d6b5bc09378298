#pragma once
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zrs/numeric.hpp"

namespace zrs {

// Grid function on the unit torus; values live at cell centers (i+1/2)/M.
struct DensityField {
    int m = 0;
    double dx = 0.0;
    std::vector<double> values;

    DensityField() = default;
    explicit DensityField(int m_, double fill = 0.0)
        : m(m_), dx(1.0 / double(m_)), values(std::size_t(m_), fill) {}

    double x_center(int i) const { return (double(i) + 0.5) * dx; }
    double mass() const {
        KahanSum s;
        for (double v : values) s.add(v);
        return s.value() * dx;
    }
};

inline double l1_distance(const DensityField& a, const DensityField& b) {
    if (a.m != b.m) throw std::invalid_argument("l1_distance: grid mismatch");
    KahanSum s;
    for (int i = 0; i < a.m; ++i)
        s.add(std::abs(a.values[std::size_t(i)] - b.values[std::size_t(i)]));
    return s.value() * a.dx;
}

} // namespace zrs
