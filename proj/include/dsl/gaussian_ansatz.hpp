#pragma once

#include "dsl/errors.hpp"
#include "dsl/field.hpp"
#include "dsl/field_io.hpp"
#include "dsl/pilot_wave.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace dsl {

/// phi = exp(-A x^2 / 2 + B x + C) along one axis.
struct GaussianAxis {
    Complex A{1.0, 0.0};
    Complex B{};
    Complex C{};

    double barycentre() const { return B.real() / A.real(); }
    /// Standard deviation of |phi|^2.
    double width() const { return 1.0 / std::sqrt(2.0 * A.real()); }
    Complex exponent(double x) const { return -0.5 * A * x * x + B * x + C; }
};

/// Separable Gaussian soliton: product of one GaussianAxis per dimension.
struct GaussianSolitonParams {
    int dims = 1;
    std::array<GaussianAxis, 3> axes{};
    double time = 0.0;

    void validate() const {
        if (dims < 1 || dims > 3) throw InvalidArgument("gaussian dims must be 1, 2 or 3");
        for (int a = 0; a < dims; ++a) {
            if (!(axes[a].A.real() > 0.0)) throw InvalidArgument("gaussian Re A must be > 0 on every axis");
            if (!std::isfinite(axes[a].barycentre())) throw NumericalError("gaussian barycentre is not finite");
        }
    }

    Vec3 barycentre() const {
        Vec3 x;
        for (int a = 0; a < dims; ++a) x[a] = axes[a].barycentre();
        return x;
    }

    /// Real soliton of peak 1 centred at x0 with A = a0 on every axis.
    static GaussianSolitonParams real(int dims, double a0, const Vec3& x0, double t0 = 0.0) {
        GaussianSolitonParams p;
        p.dims = dims;
        p.time = t0;
        for (int a = 0; a < dims; ++a) p.axes[a] = {a0, a0 * x0[a], -0.5 * a0 * x0[a] * x0[a]};
        p.validate();
        return p;
    }
};

/// Time derivatives of (A, B, C) per axis.
struct GaussianRates {
    std::array<GaussianAxis, 3> axes{};
};

/// Right-hand side of the reduced ODE system. The self-potential is replaced
/// by its quadratic Taylor polynomial in x,
///   V = V0 + V1 x + V2 x^2 / 2,  V1 = -(hbar^2/m) Re A Re B,
///   V0 = (hbar^2/2m)((Re B)^2 - Re A),
/// so that a real soliton keeps peak amplitude exp(Re C + (Re B)^2 / 2 Re A).
inline GaussianRates ode_rhs(const GaussianSolitonParams& p, const PilotWave& pilot, double t) {
    const auto grad = pilot.uniform_phase_gradient(t);
    if (!grad)
        throw UnsupportedPilot("the Gaussian ansatz needs a pilot with uniform phase gradient, got " +
                               pilot.kind_name());
    if (pilot.dims() != p.dims) throw InvalidArgument("gaussian and pilot dims differ");
    const double hm = pilot.constants().hbar_over_mass();
    const Complex I{0.0, 1.0};
    GaussianRates r;
    for (int a = 0; a < p.dims; ++a) {
        const auto& [A, B, C] = p.axes[a];
        const double ra = A.real(), rb = B.real();
        const double v1 = -hm * ra * rb;               // V1 / hbar
        const double v0 = 0.5 * hm * (rb * rb - ra);   // V0 / hbar
        const double g = (*grad)[a];
        r.axes[a].A = -I * hm * (A * A - ra * ra);
        r.axes[a].B = -I * (hm * A * B + v1) + hm * A * g;
        r.axes[a].C = -I * (0.5 * hm * (A - B * B) + v0) - hm * B * g;
    }
    return r;
}

struct GaussianTrajectory {
    std::vector<GaussianSolitonParams> samples;
    // Largest |A(t) - A(0)| and |Im B(t) - Im B(0)| over the run, any axis.
    double max_a_drift = 0.0;
    double max_im_b_drift = 0.0;
};

namespace detail {

inline GaussianSolitonParams axpy(const GaussianSolitonParams& p, const GaussianRates& r, double h) {
    GaussianSolitonParams q = p;
    for (int a = 0; a < p.dims; ++a) {
        q.axes[a].A += h * r.axes[a].A;
        q.axes[a].B += h * r.axes[a].B;
        q.axes[a].C += h * r.axes[a].C;
    }
    return q;
}

inline bool finite(const GaussianSolitonParams& p) {
    for (int a = 0; a < p.dims; ++a)
        for (Complex z : {p.axes[a].A, p.axes[a].B, p.axes[a].C})
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

}  // namespace detail

/// Classical RK4 from p0.time to t_final. The step is shrunk slightly so the
/// last sample lands on t_final; `every` controls how often samples are kept.
inline GaussianTrajectory integrate_params(const GaussianSolitonParams& p0, const PilotWave& pilot, double t_final,
                                           double dt, std::size_t every = 1) {
    p0.validate();
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(t_final >= p0.time)) throw InvalidArgument("t_final must not precede the initial time");
    if (every == 0) throw InvalidArgument("sampling stride must be positive");
    if (std::holds_alternative<CoherentState>(pilot.kind()) && dt > pilot.characteristic_time() / 200.0)
        throw InvalidArgument("dt must not exceed 1/200 of the oscillator period");

    const auto n = static_cast<std::size_t>(std::ceil((t_final - p0.time) / dt - 1e-9));
    const double h = n > 0 ? (t_final - p0.time) / static_cast<double>(n) : 0.0;
    GaussianTrajectory out;
    out.samples.push_back(p0);
    GaussianSolitonParams p = p0;
    for (std::size_t s = 0; s < n; ++s) {
        const double t = p0.time + static_cast<double>(s) * h;
        const auto k1 = ode_rhs(p, pilot, t);
        const auto k2 = ode_rhs(detail::axpy(p, k1, 0.5 * h), pilot, t + 0.5 * h);
        const auto k3 = ode_rhs(detail::axpy(p, k2, 0.5 * h), pilot, t + 0.5 * h);
        const auto k4 = ode_rhs(detail::axpy(p, k3, h), pilot, t + h);
        for (int a = 0; a < p.dims; ++a) {
            auto& ax = p.axes[a];
            ax.A += h / 6.0 * (k1.axes[a].A + 2.0 * k2.axes[a].A + 2.0 * k3.axes[a].A + k4.axes[a].A);
            ax.B += h / 6.0 * (k1.axes[a].B + 2.0 * k2.axes[a].B + 2.0 * k3.axes[a].B + k4.axes[a].B);
            ax.C += h / 6.0 * (k1.axes[a].C + 2.0 * k2.axes[a].C + 2.0 * k3.axes[a].C + k4.axes[a].C);
        }
        p.time = p0.time + static_cast<double>(s + 1) * h;
        if (!detail::finite(p))
            throw NumericalError("integrate_params: non-finite parameters at t = " + std::to_string(p.time));
        for (int a = 0; a < p.dims; ++a) {
            out.max_a_drift = std::max(out.max_a_drift, std::abs(p.axes[a].A - p0.axes[a].A));
            out.max_im_b_drift = std::max(out.max_im_b_drift, std::abs(p.axes[a].B.imag() - p0.axes[a].B.imag()));
        }
        if ((s + 1) % every == 0 || s + 1 == n) out.samples.push_back(p);
    }
    return out;
}

/// Samples the Gaussian on a grid; the grid must cover six widths on each
/// side of the barycentre.
inline ComplexField params_to_field(const GaussianSolitonParams& p, const Grid& grid) {
    p.validate();
    if (grid.dims() != p.dims) throw GridMismatch("gaussian and grid dims differ");
    for (int a = 0; a < p.dims; ++a) {
        const double x0 = p.axes[a].barycentre(), w = 6.0 * p.axes[a].width();
        if (x0 - w < grid.lower(a) || x0 + w > grid.upper(a))
            throw InvalidArgument(std::string("grid does not cover six widths around the barycentre on axis ") +
                                  axis_name(a));
    }
    return ComplexField::sample(grid, [&](const Vec3& x) {
        Complex e{};
        for (int a = 0; a < p.dims; ++a) e += p.axes[a].exponent(x[a]);
        return std::exp(e);
    });
}

inline void write_gaussian_csv(const std::vector<GaussianSolitonParams>& h, std::ostream& os) {
    if (h.empty()) return;
    const int dims = h.front().dims;
    os << 't';
    for (int a = 0; a < dims; ++a) {
        const std::string s = axis_name(a);
        for (const char* f : {"A", "B", "C"}) os << ",re_" << f << '_' << s << ",im_" << f << '_' << s;
        os << ",x0_" << s;
    }
    os << '\n' << std::setprecision(csv_precision);
    for (const auto& p : h) {
        os << p.time;
        for (int a = 0; a < dims; ++a) {
            const auto& ax = p.axes[a];
            for (Complex z : {ax.A, ax.B, ax.C}) os << ',' << z.real() << ',' << z.imag();
            os << ',' << ax.barycentre();
        }
        os << '\n';
    }
}

}  // namespace dsl
