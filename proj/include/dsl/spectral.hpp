#pragma once

#include "dsl/constants.hpp"
#include "dsl/field.hpp"

#include <fftw3.h>

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dsl {

namespace detail {

// FFTW's planner is not thread-safe; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* data = nullptr;
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using FftwPlanPtr = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

}  // namespace detail

/// In-place multidimensional FFT pair on a grid. The backward transform is
/// normalized so that backward(forward(f)) == f.
class FftPlan {
public:
    explicit FftPlan(const Grid& grid) : grid_(grid), buffer_(std::make_unique<detail::FftwBuffer>(grid.size())) {
        int n[3];
        for (int a = 0; a < grid.dims(); ++a) n[a] = static_cast<int>(grid.points(a));
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_.reset(fftw_plan_dft(grid.dims(), n, buffer_->data, buffer_->data, FFTW_FORWARD, FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft(grid.dims(), n, buffer_->data, buffer_->data, FFTW_BACKWARD, FFTW_ESTIMATE));
    }

    const Grid& grid() const { return grid_; }

    void forward(std::span<Complex> data) { run(forward_.get(), data, 1.0); }
    void backward(std::span<Complex> data) { run(backward_.get(), data, 1.0 / static_cast<double>(grid_.size())); }

private:
    void run(fftw_plan plan, std::span<Complex> data, double scale) {
        auto* buf = reinterpret_cast<Complex*>(buffer_->data);
        std::copy(data.begin(), data.end(), buf);
        fftw_execute(plan);
        for (std::size_t n = 0; n < data.size(); ++n) data[n] = buf[n] * scale;
    }

    Grid grid_;
    std::unique_ptr<detail::FftwBuffer> buffer_;
    detail::FftwPlanPtr forward_;
    detail::FftwPlanPtr backward_;
};

/// Fourier-space derivative operators on a fixed grid. Holds an FFT plan, so
/// one instance should not be shared between threads.
class SpectralOps {
public:
    explicit SpectralOps(const Grid& grid) : grid_(grid), fft_(grid), k2_(grid.size()) {
        for (std::size_t n = 0; n < grid.size(); ++n) {
            const auto ijk = grid.unflatten(n);
            double s = 0.0;
            for (int a = 0; a < grid.dims(); ++a) {
                const double k = grid.wavenumber(a, ijk[a]);
                s += k * k;
            }
            k2_[n] = s;
        }
    }

    const Grid& grid() const { return grid_; }
    FftPlan& fft() { return fft_; }
    const std::vector<double>& k_squared() const { return k2_; }

    ComplexField laplacian(const ComplexField& f) {
        check(f);
        ComplexField out = f;
        fft_.forward(out.values());
        for (std::size_t n = 0; n < out.size(); ++n) out[n] *= -k2_[n];
        fft_.backward(out.values());
        return out;
    }

    /// d f / d x_axis. The Nyquist bin is dropped so real input stays real.
    ComplexField derivative(const ComplexField& f, int axis) {
        check(f);
        ComplexField spec = f;
        fft_.forward(spec.values());
        return derivative_from_spectrum(spec, axis);
    }

    /// Gradient components (one per grid axis) and Laplacian from a single
    /// forward transform.
    struct Derivatives {
        std::array<ComplexField, 3> gradient;
        ComplexField laplacian;
    };

    Derivatives derivatives(const ComplexField& f) {
        check(f);
        ComplexField spec = f;
        fft_.forward(spec.values());
        Derivatives d;
        for (int a = 0; a < grid_.dims(); ++a) d.gradient[a] = derivative_from_spectrum(spec, a);
        d.laplacian = spec;
        for (std::size_t n = 0; n < spec.size(); ++n) d.laplacian[n] *= -k2_[n];
        fft_.backward(d.laplacian.values());
        return d;
    }

    /// Returns g(x) = f(x - displacement) using the Fourier shift theorem.
    /// Nyquist bins get the real factor cos(k d) so real input stays real.
    ComplexField translate(const ComplexField& f, const Vec3& displacement) {
        check(f);
        ComplexField out = f;
        fft_.forward(out.values());
        for (std::size_t n = 0; n < out.size(); ++n) {
            const auto ijk = grid_.unflatten(n);
            Complex factor{1.0, 0.0};
            for (int a = 0; a < grid_.dims(); ++a) {
                const double phase = grid_.wavenumber(a, ijk[a]) * displacement[a];
                factor *= grid_.is_nyquist(a, ijk[a]) ? Complex(std::cos(phase), 0.0)
                                                      : std::polar(1.0, -phase);
            }
            out[n] *= factor;
        }
        fft_.backward(out.values());
        return out;
    }

private:
    void check(const ComplexField& f) const {
        if (!(f.grid() == grid_)) throw GridMismatch("field grid differs from the spectral workspace grid");
    }

    ComplexField derivative_from_spectrum(const ComplexField& spec, int axis) {
        ComplexField out = spec;
        for (std::size_t n = 0; n < out.size(); ++n) {
            const auto j = grid_.unflatten(n)[axis];
            out[n] *= grid_.is_nyquist(axis, j) ? Complex{} : Complex(0.0, grid_.wavenumber(axis, j));
        }
        fft_.backward(out.values());
        return out;
    }

    Grid grid_;
    FftPlan fft_;
    std::vector<double> k2_;
};

/// Laplacian by multiplication with -k^2 in Fourier space (periodic box).
inline ComplexField spectral_laplacian(const ComplexField& f) {
    SpectralOps ops(f.grid());
    return ops.laplacian(f);
}

inline std::array<ComplexField, 3> spectral_gradient(const ComplexField& f) {
    SpectralOps ops(f.grid());
    std::array<ComplexField, 3> g;
    for (int a = 0; a < f.grid().dims(); ++a) g[a] = ops.derivative(f, a);
    return g;
}

/// Real external potential V(t, x).
using Potential = std::function<double(double, const Vec3&)>;

inline Potential zero_potential() {
    return [](double, const Vec3&) { return 0.0; };
}

inline Potential harmonic_potential(double mass, double omega) {
    return [k = mass * omega * omega](double, const Vec3& x) { return 0.5 * k * dot(x, x); };
}

/// Fields whose boundary amplitude exceeds this fraction of the peak trigger
/// an edge-mass warning (periodic wrap-around is no longer negligible).
inline constexpr double edge_warning_threshold = 1e-12;

/// Strang-split (potential/2, kinetic, potential/2) propagator for the linear
/// Schroedinger equation on a periodic grid.
class LinearPropagator {
public:
    LinearPropagator(const Grid& grid, PhysicalConstants constants, Potential potential,
                     bool time_independent = false)
        : ops_(grid),
          constants_(constants),
          potential_(std::move(potential)),
          static_potential_(time_independent) {
        constants_.validate();
    }

    /// Advances f from t0 by n_steps steps of size dt.
    ComplexField propagate(ComplexField f, double t0, double dt, std::size_t n_steps) {
        if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
        prepare_kinetic(dt);
        for (std::size_t s = 0; s < n_steps; ++s) {
            const double t = t0 + static_cast<double>(s) * dt;
            step(f, t, dt);
            if (!f.all_finite())
                throw NumericalError("split_step_linear: non-finite amplitude after step " + std::to_string(s + 1) +
                                     " (t = " + std::to_string(t + dt) + ")");
        }
        check_edges(f, t0 + static_cast<double>(n_steps) * dt);
        return f;
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    void prepare_kinetic(double dt) {
        if (kinetic_dt_ == dt) return;
        const auto& k2 = ops_.k_squared();
        kinetic_.resize(k2.size());
        const double c = constants_.hbar / (2.0 * constants_.mass) * dt;
        for (std::size_t n = 0; n < k2.size(); ++n) kinetic_[n] = std::polar(1.0, -c * k2[n]);
        kinetic_dt_ = dt;
    }

    void potential_half_step(ComplexField& f, double t_mid, double dt) {
        const auto& g = f.grid();
        if (!static_potential_ || potential_phase_dt_ != dt || potential_phase_.empty()) {
            potential_phase_.resize(g.size());
            for (std::size_t n = 0; n < g.size(); ++n)
                potential_phase_[n] = std::polar(1.0, -0.5 * dt * potential_(t_mid, g.position(n)) / constants_.hbar);
            potential_phase_dt_ = dt;
        }
        for (std::size_t n = 0; n < f.size(); ++n) f[n] *= potential_phase_[n];
    }

    void step(ComplexField& f, double t, double dt) {
        const double t_mid = t + 0.5 * dt;
        potential_half_step(f, t_mid, dt);
        ops_.fft().forward(f.values());
        for (std::size_t n = 0; n < f.size(); ++n) f[n] *= kinetic_[n];
        ops_.fft().backward(f.values());
        potential_half_step(f, t_mid, dt);
    }

    void check_edges(const ComplexField& f, double t) {
        const double r = edge_amplitude_ratio(f);
        if (r > edge_warning_threshold)
            warnings_.push_back("EdgeMass: boundary amplitude ratio " + sci(r) + " at t = " + sci(t) +
                                " exceeds " + sci(edge_warning_threshold));
    }

    SpectralOps ops_;
    PhysicalConstants constants_;
    Potential potential_;
    bool static_potential_;
    std::vector<Complex> kinetic_;
    double kinetic_dt_ = -1.0;
    std::vector<Complex> potential_phase_;
    double potential_phase_dt_ = -1.0;
    std::vector<std::string> warnings_;
};

/// Convenience wrapper around LinearPropagator.
inline ComplexField split_step_linear(const ComplexField& f, const Potential& potential, double t0, double dt,
                                      std::size_t n_steps, const PhysicalConstants& constants) {
    LinearPropagator prop(f.grid(), constants, potential);
    return prop.propagate(f, t0, dt, n_steps);
}

}  // namespace dsl
