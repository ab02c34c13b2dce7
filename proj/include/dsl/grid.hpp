#pragma once

#include "dsl/errors.hpp"
#include "dsl/vec.hpp"

#include <array>
#include <cstddef>
#include <string>

namespace dsl {

/// Uniform periodic Cartesian grid, 1 to 3 axes, with node coordinates
/// x_j = -L/2 + j*dx so that the box is centred on the origin.
class Grid {
public:
    static constexpr std::size_t min_points = 8;

    Grid() = default;

    Grid(int dims, std::array<std::size_t, 3> points, std::array<double, 3> lengths)
        : dims_(dims) {
        if (dims < 1 || dims > 3) throw InvalidArgument("grid.dims must be 1, 2 or 3");
        for (int a = 0; a < 3; ++a) {
            if (a >= dims) {
                points_[a] = 1;
                lengths_[a] = 1.0;
                spacing_[a] = 1.0;
                continue;
            }
            const auto n = points[a];
            if (n < min_points || (n & (n - 1)) != 0)
                throw InvalidArgument("grid.points must be a power of two >= 8 (axis " +
                                      std::to_string(a) + " has " + std::to_string(n) + ")");
            if (!(lengths[a] > 0.0))
                throw InvalidArgument("grid.length must be positive (axis " + std::to_string(a) + ")");
            points_[a] = n;
            lengths_[a] = lengths[a];
            spacing_[a] = lengths[a] / static_cast<double>(n);
        }
    }

    int dims() const { return dims_; }
    std::size_t points(int axis) const { return points_[axis]; }
    double length(int axis) const { return lengths_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    const std::array<std::size_t, 3>& points() const { return points_; }
    const std::array<double, 3>& lengths() const { return lengths_; }

    std::size_t size() const { return points_[0] * points_[1] * points_[2]; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dims_; ++a) v *= spacing_[a];
        return v;
    }

    double coordinate(int axis, std::size_t j) const {
        return -0.5 * lengths_[axis] + static_cast<double>(j) * spacing_[axis];
    }

    double lower(int axis) const { return -0.5 * lengths_[axis]; }
    double upper(int axis) const { return 0.5 * lengths_[axis]; }

    /// Row-major flat index, last axis fastest.
    std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const {
        return (i * points_[1] + j) * points_[2] + k;
    }

    std::array<std::size_t, 3> unflatten(std::size_t flat) const {
        const std::size_t k = flat % points_[2];
        flat /= points_[2];
        const std::size_t j = flat % points_[1];
        const std::size_t i = flat / points_[1];
        return {i, j, k};
    }

    Vec3 position(std::size_t flat) const {
        const auto ijk = unflatten(flat);
        Vec3 x;
        for (int a = 0; a < dims_; ++a) x[a] = coordinate(a, ijk[a]);
        return x;
    }

    /// True if the point lies inside the half-open periodic box.
    bool contains(const Vec3& x) const {
        for (int a = 0; a < dims_; ++a)
            if (x[a] < lower(a) || x[a] >= upper(a)) return false;
        return true;
    }

    /// Angular wavenumber of FFT bin j on the given axis (FFTW ordering).
    double wavenumber(int axis, std::size_t j) const {
        const auto n = static_cast<long>(points_[axis]);
        const long m = static_cast<long>(j) < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - n;
        return 2.0 * M_PI * static_cast<double>(m) / lengths_[axis];
    }

    bool is_nyquist(int axis, std::size_t j) const { return j == points_[axis] / 2; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dims_ == b.dims_ && a.points_ == b.points_ && a.lengths_ == b.lengths_;
    }

private:
    int dims_ = 1;
    std::array<std::size_t, 3> points_{1, 1, 1};
    std::array<double, 3> lengths_{1.0, 1.0, 1.0};
    std::array<double, 3> spacing_{1.0, 1.0, 1.0};
};

inline Grid make_grid(int dims, std::array<std::size_t, 3> points, std::array<double, 3> lengths) {
    return Grid(dims, points, lengths);
}

/// Same resolution and extent on every axis.
inline Grid make_grid(int dims, std::size_t points, double length) {
    return Grid(dims, {points, points, points}, {length, length, length});
}

}  // namespace dsl
