#pragma once

#include "dsl/errors.hpp"
#include "dsl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace dsl {

using Complex = std::complex<double>;

/// Complex amplitude sampled on every node of a Grid.
class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(Grid grid) : grid_(grid), values_(grid.size(), Complex{}) {}
    ComplexField(Grid grid, std::vector<Complex> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw InvalidArgument("field value count does not match grid size");
    }

    /// Samples f(x) at every node.
    template <class F>
    static ComplexField sample(const Grid& grid, F&& f) {
        ComplexField out(grid);
        for (std::size_t n = 0; n < grid.size(); ++n) out.values_[n] = Complex(f(grid.position(n)));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    Complex& operator[](std::size_t n) { return values_[n]; }
    const Complex& operator[](std::size_t n) const { return values_[n]; }

    std::span<Complex> values() { return values_; }
    std::span<const Complex> values() const { return values_; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](const Complex& z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : values_) m = std::max(m, std::abs(z));
        return m;
    }

    ComplexField& operator+=(const ComplexField& o) {
        require_same_grid(o);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
        return *this;
    }
    ComplexField& operator-=(const ComplexField& o) {
        require_same_grid(o);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
        return *this;
    }
    ComplexField& operator*=(Complex s) {
        for (auto& z : values_) z *= s;
        return *this;
    }
    friend ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
    friend ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
    friend ComplexField operator*(ComplexField a, Complex s) { return a *= s; }
    friend ComplexField operator*(Complex s, ComplexField a) { return a *= s; }

    void require_same_grid(const ComplexField& o) const {
        if (!(grid_ == o.grid_)) throw GridMismatch("fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<Complex> values_;
};

/// Real-valued companion used for potentials and masks.
struct RealField {
    Grid grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(Grid g) : grid(g), values(g.size(), 0.0) {}
};

// ---------------------------------------------------------------------------
// Quadrature on the grid (Riemann sum, spectrally accurate for smooth periodic
// integrands).

inline Complex overlap(const ComplexField& f, const ComplexField& g) {
    f.require_same_grid(g);
    Complex s{};
    for (std::size_t n = 0; n < f.size(); ++n) s += std::conj(f[n]) * g[n];
    return s * f.grid().cell_volume();
}

inline double norm_squared(const ComplexField& f) {
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) s += std::norm(f[n]);
    return s * f.grid().cell_volume();
}

inline double l2_norm(const ComplexField& f) { return std::sqrt(norm_squared(f)); }

/// |f|^2-weighted mean position.
inline Vec3 expectation_position(const ComplexField& f) {
    const auto& g = f.grid();
    double w = 0.0;
    Vec3 m;
    for (std::size_t n = 0; n < f.size(); ++n) {
        const double p = std::norm(f[n]);
        w += p;
        m += p * g.position(n);
    }
    if (!(w > 0.0)) throw InvalidArgument("expectation_position of a zero-norm field");
    return m * (1.0 / w);
}

/// |f|^2-weighted root-mean-square distance from the mean position.
inline double rms_width(const ComplexField& f) {
    const auto& g = f.grid();
    const Vec3 mean = expectation_position(f);
    double w = 0.0, s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        const double p = std::norm(f[n]);
        const Vec3 d = g.position(n) - mean;
        w += p;
        s += p * dot(d, d);
    }
    return std::sqrt(s / w);
}

/// Largest |f| on the outermost layer of nodes relative to max |f|.
inline double edge_amplitude_ratio(const ComplexField& f) {
    const auto& g = f.grid();
    const double peak = f.max_abs();
    if (peak == 0.0) return 0.0;
    double edge = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        const auto ijk = g.unflatten(n);
        bool on_edge = false;
        for (int a = 0; a < g.dims(); ++a)
            on_edge = on_edge || ijk[a] == 0 || ijk[a] + 1 == g.points(a);
        if (on_edge) edge = std::max(edge, std::abs(f[n]));
    }
    return edge / peak;
}

}  // namespace dsl
