#pragma once

#include "dsl/constants.hpp"
#include "dsl/errors.hpp"
#include "dsl/field.hpp"
#include "dsl/hermite.hpp"
#include "dsl/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dsl {

// ---------------------------------------------------------------------------
// Pilot-wave families. Every family is an exact solution of the linear
// Schroedinger equation for its potential (free or isotropic harmonic).

/// exp(i k.x - i hbar k^2 t / 2m), free particle.
struct PlaneWave {
    Vec3 k;
};

/// Harmonic-oscillator coherent state. Each axis oscillates as
/// x_c(t) = amplitude * cos(omega t + phase); width^2 = hbar / (2 m omega).
struct CoherentState {
    double omega = 1.0;
    Vec3 amplitude;
    Vec3 phase;
};

/// Superposition of product harmonic eigenstates |n_x, n_y, n_z>.
struct EigenstateSuperposition {
    struct Term {
        std::array<int, 3> n{0, 0, 0};
        Complex coefficient{1.0, 0.0};
    };
    std::vector<Term> terms;
    double omega = 1.0;
};

/// Freely spreading Gaussian packet; |psi|^2 has standard deviation sigma0 per
/// axis at t = 0 and carries mean wavevector k.
struct FreeGaussian {
    Vec3 center;
    Vec3 k;
    double sigma0 = 1.0;
};

/// Snapshots of a numerically propagated pilot wave together with their
/// spectral derivatives. Evaluation interpolates with 4-point Lagrange
/// stencils in time and 6-point stencils in each spatial axis.
struct NumericPilotData {
    Grid grid;
    double t0 = 0.0;
    double snapshot_dt = 0.0;
    std::vector<ComplexField> psi;
    std::vector<std::array<ComplexField, 3>> gradient;
    std::vector<ComplexField> laplacian;
    double max_amplitude = 0.0;
    double rms_width = 0.0;
    std::vector<std::string> warnings;

    double t_end() const { return t0 + snapshot_dt * static_cast<double>(psi.size() - 1); }
};

struct NumericPilot {
    std::shared_ptr<const NumericPilotData> data;
};

using PilotKind = std::variant<PlaneWave, CoherentState, EigenstateSuperposition, FreeGaussian, NumericPilot>;

/// Value, gradient and Laplacian of the pilot wave at one point.
struct PilotJet {
    Complex value;
    std::array<Complex, 3> gradient{};
    Complex laplacian;
};

/// Polar decomposition data Psi_L = R_L exp(i phi_L) at one point.
struct PhaseData {
    double amplitude = 0.0;           // R_L
    Vec3 grad_phase;                  // grad phi_L
    double laplacian_phase = 0.0;     // Laplacian phi_L
    Vec3 grad_log_amplitude;          // grad R_L / R_L
    double laplacian_amplitude_ratio = 0.0;  // Laplacian R_L / R_L
};

inline constexpr double default_node_epsilon = 1e-8;

namespace detail {

inline double lagrange4_weight(int i, double s) {
    // Nodes at -1, 0, 1, 2; s in [0, 1).
    switch (i) {
        case 0: return -s * (s - 1.0) * (s - 2.0) / 6.0;
        case 1: return (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        case 2: return -(s + 1.0) * s * (s - 2.0) / 2.0;
        default: return (s + 1.0) * s * (s - 1.0) / 6.0;
    }
}

inline constexpr int spatial_stencil = 6;

// Lagrange weight of node i (nodes at -2..3) evaluated at s in [0, 1).
inline double lagrange6_weight(int i, double s) {
    double w = 1.0;
    const double xi = i - 2.0;
    for (int j = 0; j < spatial_stencil; ++j) {
        if (j == i) continue;
        const double xj = j - 2.0;
        w *= (s - xj) / (xi - xj);
    }
    return w;
}

}  // namespace detail

/// An immutable pilot wave Psi_L with its physical constants and an overall
/// complex scale factor (which never affects guidance).
class PilotWave {
public:
    PilotWave(PilotKind kind, int dims, PhysicalConstants constants, Complex scale = {1.0, 0.0})
        : kind_(std::move(kind)), dims_(dims), constants_(constants), scale_(scale) {
        if (dims < 1 || dims > 3) throw InvalidArgument("pilot dims must be 1, 2 or 3");
        constants_.validate();
        if (scale_ == Complex{}) throw InvalidArgument("pilot scale must be nonzero");
        std::visit([this](const auto& k) { validate(k); }, kind_);
    }

    const PilotKind& kind() const { return kind_; }
    int dims() const { return dims_; }
    const PhysicalConstants& constants() const { return constants_; }
    Complex scale() const { return scale_; }

    PilotWave scaled(Complex lambda) const { return PilotWave(kind_, dims_, constants_, scale_ * lambda); }

    std::string kind_name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, PlaneWave>) return "plane_wave";
                else if constexpr (std::is_same_v<T, CoherentState>) return "coherent";
                else if constexpr (std::is_same_v<T, EigenstateSuperposition>) return "superposition";
                else if constexpr (std::is_same_v<T, FreeGaussian>) return "free_gaussian";
                else return "numeric";
            },
            kind_);
    }

    PilotJet jet(double t, const Vec3& x) const {
        PilotJet j = std::visit([&](const auto& k) { return jet_of(k, t, x); }, kind_);
        j.value *= scale_;
        for (auto& g : j.gradient) g *= scale_;
        j.laplacian *= scale_;
        return j;
    }

    Complex evaluate(double t, const Vec3& x) const { return jet(t, x).value; }

    /// Upper reference for |Psi_L| at time t (the exact maximum for the
    /// Gaussian families); node proximity is judged relative to it.
    double reference_amplitude(double t) const {
        return std::abs(scale_) * std::visit([&](const auto& k) { return reference_of(k, t); }, kind_);
    }

    /// sqrt(<|x - <x>|^2>) under |Psi_L|^2; +inf for plane waves.
    double rms_width(double t) const {
        return std::visit([&](const auto& k) { return rms_of(k, t); }, kind_);
    }

    /// Phase gradient when it is independent of position.
    std::optional<Vec3> uniform_phase_gradient(double t) const {
        if (const auto* pw = std::get_if<PlaneWave>(&kind_)) return pw->k;
        if (const auto* cs = std::get_if<CoherentState>(&kind_)) {
            Vec3 g;
            for (int a = 0; a < dims_; ++a)
                g[a] = -constants_.mass * cs->omega * cs->amplitude[a] * std::sin(cs->omega * t + cs->phase[a]) /
                       constants_.hbar;
            return g;
        }
        return std::nullopt;
    }

    /// Natural time scale: oscillator period, spreading time, or plane-wave
    /// phase period.
    double characteristic_time() const {
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, CoherentState> || std::is_same_v<T, EigenstateSuperposition>)
                    return 2.0 * M_PI / k.omega;
                else if constexpr (std::is_same_v<T, FreeGaussian>)
                    return 2.0 * constants_.mass * k.sigma0 * k.sigma0 / constants_.hbar;
                else if constexpr (std::is_same_v<T, PlaneWave>) {
                    const double k2 = dot(k.k, k.k);
                    return k2 > 0.0 ? 4.0 * M_PI * constants_.mass / (constants_.hbar * k2) : 1.0;
                } else
                    return k.data->t_end() - k.data->t0;
            },
            kind_);
    }

    /// Potential under which this pilot solves the linear equation.
    Potential external_potential() const {
        if (const auto* cs = std::get_if<CoherentState>(&kind_)) return harmonic_potential(constants_.mass, cs->omega);
        if (const auto* es = std::get_if<EigenstateSuperposition>(&kind_))
            return harmonic_potential(constants_.mass, es->omega);
        return zero_potential();
    }

private:
    void validate(const PlaneWave&) const {}
    void validate(const CoherentState& c) const {
        if (!(c.omega > 0.0)) throw InvalidArgument("coherent state requires omega > 0");
    }
    void validate(const EigenstateSuperposition& s) const {
        if (!(s.omega > 0.0)) throw InvalidArgument("superposition requires omega > 0");
        bool any = false;
        for (const auto& t : s.terms) {
            for (int a = 0; a < 3; ++a)
                if (t.n[a] < 0 || (a >= dims_ && t.n[a] != 0))
                    throw InvalidArgument("superposition quantum numbers must be >= 0 on used axes only");
            any = any || t.coefficient != Complex{};
        }
        if (!any) throw InvalidArgument("superposition coefficients are all zero");
    }
    void validate(const FreeGaussian& g) const {
        if (!(g.sigma0 > 0.0)) throw InvalidArgument("free gaussian requires sigma0 > 0");
    }
    void validate(const NumericPilot& n) const {
        if (!n.data || n.data->psi.empty()) throw InvalidArgument("numeric pilot has no snapshots");
        if (n.data->grid.dims() != dims_) throw InvalidArgument("numeric pilot grid dims mismatch");
        if (!(n.data->max_amplitude > 0.0)) throw InvalidArgument("numeric pilot has zero norm");
    }

    // -- jets ---------------------------------------------------------------

    PilotJet jet_of(const PlaneWave& pw, double t, const Vec3& x) const {
        const double k2 = dot(pw.k, pw.k);
        const Complex v = std::polar(1.0, dot(pw.k, x) - constants_.hbar * k2 * t / (2.0 * constants_.mass));
        PilotJet j;
        j.value = v;
        for (int a = 0; a < dims_; ++a) j.gradient[a] = Complex(0.0, pw.k[a]) * v;
        j.laplacian = -k2 * v;
        return j;
    }

    // Product of per-axis Gaussians given the log-derivative d(ln psi_a)/dx_a
    // and its derivative, so the Laplacian is sum_a [(dln)^2 + d2ln] psi.
    PilotJet gaussian_product_jet(Complex value, const std::array<Complex, 3>& dlog,
                                  const std::array<Complex, 3>& d2log) const {
        PilotJet j;
        j.value = value;
        Complex lap{};
        for (int a = 0; a < dims_; ++a) {
            j.gradient[a] = dlog[a] * value;
            lap += dlog[a] * dlog[a] + d2log[a];
        }
        j.laplacian = lap * value;
        return j;
    }

    PilotJet jet_of(const CoherentState& cs, double t, const Vec3& x) const {
        const double m = constants_.mass, hb = constants_.hbar, w = cs.omega;
        const double alpha2 = m * w / hb;
        Complex log_value{};
        std::array<Complex, 3> dlog{}, d2log{};
        for (int a = 0; a < dims_; ++a) {
            const double q = cs.amplitude[a] * std::cos(w * t + cs.phase[a]);
            const double p = -m * w * cs.amplitude[a] * std::sin(w * t + cs.phase[a]);
            const double u = x[a] - q;
            log_value += Complex(0.25 * std::log(alpha2 / M_PI) - 0.5 * alpha2 * u * u,
                                 p * (x[a] - 0.5 * q) / hb - 0.5 * w * t);
            dlog[a] = Complex(-alpha2 * u, p / hb);
            d2log[a] = -alpha2;
        }
        return gaussian_product_jet(std::exp(log_value), dlog, d2log);
    }

    PilotJet jet_of(const FreeGaussian& g, double t, const Vec3& x) const {
        const double m = constants_.mass, hb = constants_.hbar, s0 = g.sigma0;
        const Complex spread(1.0, hb * t / (2.0 * m * s0 * s0));
        const Complex s = 4.0 * s0 * s0 * spread;
        Complex log_value{};
        std::array<Complex, 3> dlog{}, d2log{};
        for (int a = 0; a < dims_; ++a) {
            const double v = hb * g.k[a] / m;
            const double u = x[a] - g.center[a] - v * t;
            log_value += -0.25 * std::log(2.0 * M_PI * s0 * s0) - 0.5 * std::log(spread) - u * u / s +
                         Complex(0.0, g.k[a] * (x[a] - g.center[a]) - 0.5 * hb * g.k[a] * g.k[a] * t / m);
            dlog[a] = -2.0 * u / s + Complex(0.0, g.k[a]);
            d2log[a] = -2.0 / s;
        }
        return gaussian_product_jet(std::exp(log_value), dlog, d2log);
    }

    PilotJet jet_of(const EigenstateSuperposition& es, double t, const Vec3& x) const {
        const double m = constants_.mass, hb = constants_.hbar, w = es.omega;
        const double alpha = std::sqrt(m * w / hb);
        const double alpha2 = alpha * alpha;
        int nmax = 0;
        for (const auto& term : es.terms)
            for (int a = 0; a < dims_; ++a) nmax = std::max(nmax, term.n[a]);
        std::array<HermiteFunctions, 3> h;
        for (int a = 0; a < dims_; ++a) h[a] = hermite_functions(nmax, alpha, x[a]);

        PilotJet j;
        for (const auto& term : es.terms) {
            double e = 0.0;
            for (int a = 0; a < dims_; ++a) e += term.n[a] + 0.5;
            const Complex c = term.coefficient * std::polar(1.0, -w * e * t);
            double prod = 1.0;
            double lap_ratio = 0.0;
            for (int a = 0; a < dims_; ++a) {
                prod *= h[a].value[term.n[a]];
                lap_ratio += alpha2 * alpha2 * x[a] * x[a] - alpha2 * (2.0 * term.n[a] + 1.0);
            }
            j.value += c * prod;
            j.laplacian += c * prod * lap_ratio;
            for (int a = 0; a < dims_; ++a) {
                double g = h[a].derivative[term.n[a]];
                for (int b = 0; b < dims_; ++b)
                    if (b != a) g *= h[b].value[term.n[b]];
                j.gradient[a] += c * g;
            }
        }
        return j;
    }

    PilotJet jet_of(const NumericPilot& np, double t, const Vec3& x) const {
        const auto& d = *np.data;
        const auto& g = d.grid;
        if (!g.contains(x)) throw InvalidArgument("pilot evaluation outside the numeric pilot grid");
        if (t < d.t0 - 1e-12 * std::max(1.0, std::abs(d.t0)) || t > d.t_end() + 1e-12 * std::max(1.0, std::abs(d.t_end())))
            throw InvalidArgument("pilot evaluation outside the numeric pilot time range");

        // Time stencil: 4 snapshots around t, clamped to the available range.
        const long ns = static_cast<long>(d.psi.size());
        const double tau = std::clamp((t - d.t0) / d.snapshot_dt, 0.0, static_cast<double>(ns - 1));
        long it = static_cast<long>(std::floor(tau));
        it = std::clamp(it, 1L, std::max(1L, ns - 3));
        std::array<long, 4> tidx{};
        std::array<double, 4> tw{};
        if (ns >= 4) {
            const double s = tau - static_cast<double>(it);
            for (int i = 0; i < 4; ++i) {
                tidx[i] = it - 1 + i;
                tw[i] = detail::lagrange4_weight(i, s);
            }
        } else {
            const long i0 = std::min(static_cast<long>(std::floor(tau)), ns - 1);
            const long i1 = std::min(i0 + 1, ns - 1);
            const double s = tau - static_cast<double>(i0);
            tidx = {i0, i1, i0, i0};
            tw = {1.0 - s, s, 0.0, 0.0};
        }

        // Spatial stencil weights per axis (periodic wrap).
        constexpr int P = detail::spatial_stencil;
        std::array<std::array<std::size_t, P>, 3> sidx{};
        std::array<std::array<double, P>, 3> sw{};
        for (int a = 0; a < 3; ++a) {
            if (a >= g.dims()) {
                sidx[a].fill(0);
                sw[a].fill(0.0);
                sw[a][0] = 1.0;
                continue;
            }
            const double u = (x[a] - g.lower(a)) / g.spacing(a);
            const long base = static_cast<long>(std::floor(u));
            const double s = u - static_cast<double>(base);
            const long n = static_cast<long>(g.points(a));
            for (int i = 0; i < P; ++i) {
                sidx[a][i] = static_cast<std::size_t>(((base - 2 + i) % n + n) % n);
                sw[a][i] = detail::lagrange6_weight(i, s);
            }
        }
        const int na = g.dims() >= 2 ? P : 1;
        const int nb = g.dims() >= 3 ? P : 1;

        PilotJet j;
        for (int ti = 0; ti < 4; ++ti) {
            if (tw[ti] == 0.0) continue;
            const auto snap = static_cast<std::size_t>(tidx[ti]);
            for (int i = 0; i < P; ++i)
                for (int jj = 0; jj < na; ++jj)
                    for (int k = 0; k < nb; ++k) {
                        const double wgt = tw[ti] * sw[0][i] * sw[1][jj] * sw[2][k];
                        const std::size_t flat = g.index(sidx[0][i], sidx[1][jj], sidx[2][k]);
                        j.value += wgt * d.psi[snap][flat];
                        for (int a = 0; a < g.dims(); ++a) j.gradient[a] += wgt * d.gradient[snap][a][flat];
                        j.laplacian += wgt * d.laplacian[snap][flat];
                    }
        }
        return j;
    }

    // -- reference amplitudes --------------------------------------------------

    double reference_of(const PlaneWave&, double) const { return 1.0; }
    double reference_of(const CoherentState& cs, double) const {
        return std::pow(constants_.mass * cs.omega / (M_PI * constants_.hbar), 0.25 * dims_);
    }
    double reference_of(const FreeGaussian& g, double t) const {
        const double tau = constants_.hbar * t / (2.0 * constants_.mass * g.sigma0 * g.sigma0);
        const double sigma_t = g.sigma0 * std::sqrt(1.0 + tau * tau);
        return std::pow(2.0 * M_PI * sigma_t * sigma_t, -0.25 * dims_);
    }
    double reference_of(const EigenstateSuperposition& es, double) const {
        double n2 = 0.0;
        for (const auto& term : es.terms) n2 += std::norm(term.coefficient);
        return std::sqrt(n2) * std::pow(constants_.mass * es.omega / (M_PI * constants_.hbar), 0.25 * dims_);
    }
    double reference_of(const NumericPilot& np, double) const { return np.data->max_amplitude; }

    // -- widths ------------------------------------------------------------------

    double rms_of(const PlaneWave&, double) const { return std::numeric_limits<double>::infinity(); }
    double rms_of(const CoherentState& cs, double) const {
        return std::sqrt(dims_ * constants_.hbar / (2.0 * constants_.mass * cs.omega));
    }
    double rms_of(const FreeGaussian& g, double t) const {
        const double tau = constants_.hbar * t / (2.0 * constants_.mass * g.sigma0 * g.sigma0);
        return std::sqrt(static_cast<double>(dims_)) * g.sigma0 * std::sqrt(1.0 + tau * tau);
    }
    double rms_of(const EigenstateSuperposition& es, double t) const {
        // <x_a> and <x_a^2> from ladder-operator matrix elements.
        const double alpha2 = constants_.mass * es.omega / constants_.hbar;
        double norm2 = 0.0;
        for (const auto& term : es.terms) norm2 += std::norm(term.coefficient);
        double variance = 0.0;
        for (int a = 0; a < dims_; ++a) {
            Complex mean{}, second{};
            for (const auto& s : es.terms)
                for (const auto& r : es.terms) {
                    bool others_equal = true;
                    for (int b = 0; b < dims_; ++b)
                        if (b != a && s.n[b] != r.n[b]) others_equal = false;
                    if (!others_equal) continue;
                    const int ns = s.n[a], nr = r.n[a];
                    double es_ = 0.0, er = 0.0;
                    for (int b = 0; b < dims_; ++b) {
                        es_ += s.n[b];
                        er += r.n[b];
                    }
                    const Complex amp = std::conj(s.coefficient) * r.coefficient * std::polar(1.0, es.omega * (es_ - er) * t);
                    const int lo = std::min(ns, nr);
                    if (std::abs(ns - nr) == 1) mean += amp * std::sqrt((lo + 1.0) / (2.0 * alpha2));
                    if (ns == nr) second += amp * (2.0 * ns + 1.0) / (2.0 * alpha2);
                    if (std::abs(ns - nr) == 2) second += amp * std::sqrt((lo + 1.0) * (lo + 2.0)) / (2.0 * alpha2);
                }
            const double m1 = mean.real() / norm2;
            variance += second.real() / norm2 - m1 * m1;
        }
        return std::sqrt(std::max(variance, 0.0));
    }
    double rms_of(const NumericPilot& np, double) const { return np.data->rms_width; }

    PilotKind kind_;
    int dims_;
    PhysicalConstants constants_;
    Complex scale_;
};

// ---------------------------------------------------------------------------

inline Complex evaluate(const PilotWave& pilot, double t, const Vec3& x) { return pilot.evaluate(t, x); }

/// Polar data from the jet:
///   grad phi = Im(grad Psi / Psi), grad R / R = Re(grad Psi / Psi),
///   Lap phi = Im(Lap Psi / Psi - sum (d_a Psi / Psi)^2),
///   Lap R / R = Re(Lap Psi / Psi) + |grad phi|^2.
inline PhaseData phase_data(const PilotWave& pilot, double t, const Vec3& x,
                            double node_epsilon = default_node_epsilon) {
    const PilotJet j = pilot.jet(t, x);
    const double amp = std::abs(j.value);
    if (!(amp > node_epsilon * pilot.reference_amplitude(t)))
        throw NodeProximity("pilot wave node near x = (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ", " +
                            std::to_string(x[2]) + ") at t = " + std::to_string(t));
    PhaseData p;
    p.amplitude = amp;
    Complex sq{};
    for (int a = 0; a < pilot.dims(); ++a) {
        const Complex r = j.gradient[a] / j.value;
        p.grad_phase[a] = r.imag();
        p.grad_log_amplitude[a] = r.real();
        sq += r * r;
    }
    const Complex lap_ratio = j.laplacian / j.value;
    p.laplacian_phase = (lap_ratio - sq).imag();
    p.laplacian_amplitude_ratio = lap_ratio.real() + dot(p.grad_phase, p.grad_phase);
    return p;
}

/// de Broglie guidance velocity (hbar/m) Im(Psi* grad Psi) / |Psi|^2.
inline Vec3 guidance_velocity(const PilotWave& pilot, double t, const Vec3& x,
                              double node_epsilon = default_node_epsilon) {
    const PilotJet j = pilot.jet(t, x);
    const double amp2 = std::norm(j.value);
    if (!(std::sqrt(amp2) > node_epsilon * pilot.reference_amplitude(t)))
        throw NodeProximity("pilot wave node at guidance evaluation, t = " + std::to_string(t));
    Vec3 v;
    const double hm = pilot.constants().hbar_over_mass();
    for (int a = 0; a < pilot.dims(); ++a) v[a] = hm * (std::conj(j.value) * j.gradient[a]).imag() / amp2;
    return v;
}

/// Samples the pilot on a grid (same dims).
inline ComplexField sample_pilot(const PilotWave& pilot, const Grid& grid, double t) {
    if (grid.dims() != pilot.dims()) throw GridMismatch("pilot and grid dims differ");
    return ComplexField::sample(grid, [&](const Vec3& x) { return pilot.evaluate(t, x); });
}

/// Propagates `initial` with the split-step solver and stores snapshots every
/// `steps_per_snapshot` steps; the result evaluates like an analytic pilot.
inline PilotWave make_numeric_pilot(const ComplexField& initial, const Potential& potential,
                                    const PhysicalConstants& constants, double t0, double t1, double dt,
                                    std::size_t steps_per_snapshot = 1) {
    if (!(t1 > t0)) throw InvalidArgument("numeric pilot requires t1 > t0");
    if (!(dt > 0.0) || steps_per_snapshot == 0) throw InvalidArgument("numeric pilot requires dt > 0");
    if (!(l2_norm(initial) > 0.0)) throw InvalidArgument("numeric pilot initial field has zero norm");
    const auto& grid = initial.grid();
    auto data = std::make_shared<NumericPilotData>();
    data->grid = grid;
    data->t0 = t0;
    data->snapshot_dt = dt * static_cast<double>(steps_per_snapshot);
    const auto n_snap = static_cast<std::size_t>(std::ceil((t1 - t0) / data->snapshot_dt - 1e-9));

    LinearPropagator prop(grid, constants, potential);
    SpectralOps ops(grid);
    ComplexField f = initial;
    double t = t0;
    for (std::size_t s = 0; s <= n_snap; ++s) {
        if (s > 0) {
            f = prop.propagate(std::move(f), t, dt, steps_per_snapshot);
            t += data->snapshot_dt;
        }
        auto der = ops.derivatives(f);
        data->gradient.push_back(std::move(der.gradient));
        data->laplacian.push_back(std::move(der.laplacian));
        data->max_amplitude = std::max(data->max_amplitude, f.max_abs());
        data->psi.push_back(f);
    }
    data->rms_width = rms_width(initial);
    data->warnings = prop.warnings();
    return PilotWave(NumericPilot{std::move(data)}, grid.dims(), constants);
}

}  // namespace dsl
