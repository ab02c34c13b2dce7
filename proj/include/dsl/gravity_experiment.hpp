#pragma once

#include "dsl/constants.hpp"
#include "dsl/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

namespace dsl {

using Complex = std::complex<double>;

/// Uniform sphere of mass m (kg) and radius R (m).
struct SelfGravitySphere {
    double mass = 0.0;
    double radius = 0.0;

    void validate() const {
        if (!(mass > 0.0)) throw InvalidArgument("sphere mass must be > 0");
        if (!(radius > 0.0)) throw InvalidArgument("sphere radius must be > 0");
    }
};

/// Gravitational energy of a point mass m at distance d from the centre of
/// the sphere's own mass distribution (Newtonian; Gauss's theorem inside).
inline double sphere_potential(const SelfGravitySphere& s, double d, const PhysicalConstants& c = PhysicalConstants::si(1.0)) {
    s.validate();
    if (!(d >= 0.0)) throw InvalidArgument("distance must be >= 0");
    const double gm2 = c.G * s.mass * s.mass;
    if (d <= s.radius) return gm2 / s.radius * (-1.5 + 0.5 * (d / s.radius) * (d / s.radius));
    return -gm2 / d;
}

inline double compton_radius(double m, const PhysicalConstants& c = PhysicalConstants::si(1.0)) {
    if (!(m > 0.0)) throw InvalidArgument("mass must be > 0");
    return c.hbar / (m * c.c);
}

/// G m^2 / (hbar c).
inline double self_coupling_ratio(double m, const PhysicalConstants& c = PhysicalConstants::si(1.0)) {
    if (!(m > 0.0)) throw InvalidArgument("mass must be > 0");
    return c.G * m * m / (c.hbar * c.c);
}

// Spin branch index: 0 = up (+), 1 = down (-).
inline constexpr int up = 0;
inline constexpr int down = 1;

inline const char* branch_name(int i) { return i == up ? "+" : "-"; }

/// Two Stern-Gerlach devices A and B run in parallel for a time tau.
/// d[i][j] is the distance between path i of A and path j of B; intra_A is
/// the separation between the two paths inside A (same for B).
struct ExperimentConfig {
    double m_A = 0.0, m_B = 0.0;
    double R_A = 0.0, R_B = 0.0;
    double tau = 0.0;
    std::array<std::array<double, 2>, 2> d{};
    std::optional<double> intra_A, intra_B;
    std::array<Complex, 2> amp_A{Complex(M_SQRT1_2), Complex(M_SQRT1_2)};  // (alpha_A, beta_A)
    std::array<Complex, 2> amp_B{Complex(M_SQRT1_2), Complex(M_SQRT1_2)};
    PhysicalConstants constants = PhysicalConstants::si(1.0);

    void validate() const {
        if (!(m_A > 0.0) || !(m_B > 0.0)) throw InvalidArgument("masses must be > 0");
        if (!(R_A > 0.0) || !(R_B > 0.0)) throw InvalidArgument("radii must be > 0");
        if (!(tau >= 0.0)) throw InvalidArgument("tau must be >= 0");
        const double rmax = std::max(R_A, R_B);
        for (const auto& row : d)
            for (double v : row)
                if (!(v > rmax)) throw InvalidArgument("path separations must exceed both radii");
        for (const auto& s : {intra_A, intra_B})
            if (s && !(*s > rmax)) throw InvalidArgument("intra-device separations must exceed both radii");
        for (const auto* a : {&amp_A, &amp_B})
            if (std::abs(std::norm((*a)[0]) + std::norm((*a)[1]) - 1.0) > 1e-12)
                throw InvalidArgument("spin amplitudes must satisfy |alpha|^2 + |beta|^2 = 1");
    }
};

using BranchPhases = std::array<std::array<double, 2>, 2>;  // [i][j]

/// Phases tau G m_A m_B / (hbar d_ij) of the linear theory.
inline BranchPhases theta_standard(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto& c = cfg.constants;
    BranchPhases th{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) th[i][j] = cfg.tau * c.G * cfg.m_A * cfg.m_B / (c.hbar * cfg.d[i][j]);
    return th;
}

/// Contributions to theta_ij when the masses travel along paths (k, l).
struct SolitonPhaseTerms {
    BranchPhases self_A{}, self_B{}, cross{};

    BranchPhases total() const {
        BranchPhases t{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) t[i][j] = self_A[i][j] + self_B[i][j] + cross[i][j];
        return t;
    }
};

/// Each phase is -tau/hbar times the Newtonian energy felt by the wave branch
/// (i, j): the wave of A on path i sits in the potential of A's own mass on
/// path k and of B's mass on path l, and symmetrically for B. When both wave
/// branches coincide with the mass paths the A-B interaction is counted once.
inline SolitonPhaseTerms theta_soliton_terms(const ExperimentConfig& cfg, int k, int l) {
    cfg.validate();
    if (k < 0 || k > 1 || l < 0 || l > 1) throw InvalidArgument("mass branch indices must be 0 (+) or 1 (-)");
    if (!cfg.intra_A || !cfg.intra_B)
        throw InvalidArgument("soliton phases need the intra-device separations intra_A and intra_B");
    const auto& c = cfg.constants;
    const double f = -cfg.tau / c.hbar;
    const SelfGravitySphere A{cfg.m_A, cfg.R_A}, B{cfg.m_B, cfg.R_B};
    auto gap = [](int a, int b, double sep) { return a == b ? 0.0 : sep; };
    const double gab = c.G * cfg.m_A * cfg.m_B;
    SolitonPhaseTerms t;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            t.self_A[i][j] = f * sphere_potential(A, gap(k, i, *cfg.intra_A), c);
            t.self_B[i][j] = f * sphere_potential(B, gap(l, j, *cfg.intra_B), c);
            double e = -gab / cfg.d[i][l] - gab / cfg.d[k][j];
            if (i == k && j == l) e += gab / cfg.d[k][l];
            t.cross[i][j] = f * e;
        }
    return t;
}

inline BranchPhases theta_soliton(const ExperimentConfig& cfg, int k, int l) {
    return theta_soliton_terms(cfg, k, l).total();
}

/// Dephasing between the two paths of a single device:
/// +-tau (G m^2 / hbar)(3/(2R) - 1/d), the sign set by where the mass went.
struct SingleDeviceDephasing {
    double magnitude = 0.0;
    double phase_if_up = 0.0;
    double phase_if_down = 0.0;
    double p_up = 0.5;
    double p_down = 0.5;
};

inline SingleDeviceDephasing single_device_dephasing(double m, double R, double d, double tau,
                                                     const PhysicalConstants& c = PhysicalConstants::si(1.0),
                                                     Complex alpha = Complex(M_SQRT1_2),
                                                     Complex beta = Complex(M_SQRT1_2)) {
    const SelfGravitySphere s{m, R};
    s.validate();
    if (!(d > R)) throw InvalidArgument("path separation must exceed the radius");
    if (!(tau >= 0.0)) throw InvalidArgument("tau must be >= 0");
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
        throw InvalidArgument("spin amplitudes must satisfy |alpha|^2 + |beta|^2 = 1");
    // Phase of the empty path minus phase of the occupied path.
    const double mag = tau / c.hbar * (sphere_potential(s, d, c) - sphere_potential(s, 0.0, c));
    return {mag, mag, -mag, std::norm(alpha), std::norm(beta)};
}

/// Order-of-magnitude spring constants of the soliton: gravitational
/// k_grav = G rho m with rho = m / (hbar/mc)^3, self-focusing
/// k_focus = k_grav / ratio.
struct SpringConstants {
    double k_grav = 0.0;
    double k_focus = 0.0;
    double ratio = 0.0;
};

inline SpringConstants soliton_spring_constant(double m, const PhysicalConstants& c = PhysicalConstants::si(1.0)) {
    const double r = compton_radius(m, c);
    const double rho = m / (r * r * r);
    SpringConstants s;
    s.ratio = self_coupling_ratio(m, c);
    s.k_grav = c.G * rho * m;
    s.k_focus = s.k_grav / s.ratio;
    return s;
}

// ---------------------------------------------------------------------------
// Two-spin states in the basis {++, +-, -+, --} (index 2i + j).

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;

struct SpinDensityMatrix {
    Matrix4c rho = Matrix4c::Zero();

    void validate(double tol = 1e-12) const {
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) throw InvalidArgument("density matrix is not Hermitian");
        if (std::abs(rho.trace() - 1.0) > tol) throw InvalidArgument("density matrix trace differs from 1");
        const Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho);
        if (es.eigenvalues().minCoeff() < -tol) throw InvalidArgument("density matrix has a negative eigenvalue");
    }

    double purity() const { return (rho * rho).trace().real(); }
};

using BranchProbabilities = std::array<std::array<double, 2>, 2>;  // [k][l]

inline BranchProbabilities born_branch_probabilities(const ExperimentConfig& cfg) {
    BranchProbabilities p{};
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) p[k][l] = std::norm(cfg.amp_A[k]) * std::norm(cfg.amp_B[l]);
    return p;
}

/// sum_ij a_i b_j e^{i theta_ij} |ij>; the ++ amplitude carries phase theta_++
/// on top of the phase of alpha_A alpha_B.
inline Vector4c phased_state(const ExperimentConfig& cfg, const BranchPhases& th) {
    Vector4c v;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v(2 * i + j) = cfg.amp_A[i] * cfg.amp_B[j] * std::polar(1.0, th[i][j]);
    return v;
}

inline SpinDensityMatrix final_state_standard(const ExperimentConfig& cfg) {
    const Vector4c v = phased_state(cfg, theta_standard(cfg));
    return {v * v.adjoint()};
}

inline SpinDensityMatrix final_state_soliton(const ExperimentConfig& cfg,
                                             std::optional<BranchProbabilities> probs = std::nullopt) {
    const auto p = probs ? *probs : born_branch_probabilities(cfg);
    double sum = 0.0;
    for (const auto& row : p)
        for (double v : row) {
            if (!(v >= 0.0)) throw InvalidArgument("branch probabilities must be non-negative");
            sum += v;
        }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("branch probabilities must sum to 1");
    SpinDensityMatrix out;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            if (p[k][l] == 0.0) continue;
            const Vector4c v = phased_state(cfg, theta_soliton(cfg, k, l));
            out.rho += p[k][l] * (v * v.adjoint());
        }
    return out;
}

namespace detail {

// Eigenvalues below this (relative to the trace) are round-off; keeping them
// would add their square roots, ~1e-8, to fidelities.
inline constexpr double eigen_noise = 1e-14;

inline Eigen::Vector4d clipped(const Eigen::Vector4d& ev) {
    return ev.unaryExpr([](double v) { return v > eigen_noise ? v : 0.0; });
}

inline Matrix4c psd_sqrt(const Matrix4c& m) {
    const Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
    const Eigen::Vector4d ev = clipped(es.eigenvalues()).cwiseSqrt();
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Transpose on the B factor: <i j| rho |k l> -> <i l| rho |k j>.
inline Matrix4c partial_transpose_b(const Matrix4c& rho) {
    Matrix4c out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) out(2 * i + j, 2 * k + l) = rho(2 * i + l, 2 * k + j);
    return out;
}

/// Sum of |negative eigenvalues| of the partial transpose.
inline double negativity(const SpinDensityMatrix& s) {
    const Eigen::SelfAdjointEigenSolver<Matrix4c> es(partial_transpose_b(s.rho));
    double n = 0.0;
    for (int i = 0; i < 4; ++i) n += std::max(0.0, -es.eigenvalues()(i));
    return n;
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const SpinDensityMatrix& a, const SpinDensityMatrix& b) {
    const Matrix4c sa = detail::psd_sqrt(a.rho);
    const Matrix4c inner = sa * b.rho * sa;
    const Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (inner + inner.adjoint()));
    const double tr = detail::clipped(es.eigenvalues()).cwiseSqrt().sum();
    return tr * tr;
}

struct TomographyReport {
    double purity_standard = 0.0;
    double purity_soliton = 0.0;
    double fidelity = 0.0;
    double negativity_standard = 0.0;
    double negativity_soliton = 0.0;
    // arg(rho_standard) - arg(rho_soliton) per element, wrapped to (-pi, pi];
    // zero where either element vanishes.
    Eigen::Matrix4d phase_difference = Eigen::Matrix4d::Zero();
};

inline TomographyReport tomography_report(const SpinDensityMatrix& standard, const SpinDensityMatrix& soliton) {
    standard.validate();
    soliton.validate();
    TomographyReport r;
    r.purity_standard = standard.purity();
    r.purity_soliton = soliton.purity();
    r.fidelity = fidelity(standard, soliton);
    r.negativity_standard = negativity(standard);
    r.negativity_soliton = negativity(soliton);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const Complex a = standard.rho(i, j), b = soliton.rho(i, j);
            if (std::abs(a) > 1e-15 && std::abs(b) > 1e-15) r.phase_difference(i, j) = std::arg(a * std::conj(b));
        }
    return r;
}

}  // namespace dsl
