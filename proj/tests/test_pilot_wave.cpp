#include "dsl/pilot_wave.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dsl;

namespace {

const PhysicalConstants kNatural = PhysicalConstants::natural();

PilotWave coherent_1d(double amplitude = 2.0) {
    return PilotWave(CoherentState{1.0, Vec3(amplitude), Vec3()}, 1, kNatural);
}

PilotWave superposition_1d() {
    EigenstateSuperposition s;
    s.omega = 1.0;
    s.terms = {{{0, 0, 0}, {1.0, 0.0}}, {{1, 0, 0}, {0.0, 1.0}}, {{2, 0, 0}, {0.5, 0.5}}};
    return PilotWave(s, 1, kNatural);
}

// Oracle: 4th-order centred differences of Psi fed through
// Im(Psi* grad Psi)/|Psi|^2, then the same stencil for the divergence.
template <class F>
auto d4(F&& f, double h) {
    return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
}

Vec3 fd_grad_phase(const PilotWave& p, double t, const Vec3& x, double h) {
    Vec3 g;
    const Complex v = p.evaluate(t, x);
    for (int a = 0; a < p.dims(); ++a) {
        Vec3 e;
        e[a] = h;
        const Complex d = d4([&](double s) { return p.evaluate(t, x + e * (s / h)); }, h);
        g[a] = (std::conj(v) * d).imag() / std::norm(v);
    }
    return g;
}

double fd_laplacian_phase(const PilotWave& p, double t, const Vec3& x, double h) {
    double s = 0.0;
    for (int a = 0; a < p.dims(); ++a) {
        Vec3 e;
        e[a] = h;
        s += d4([&](double u) { return fd_grad_phase(p, t, x + e * (u / h), h)[a]; }, h);
    }
    return s;
}

double residual_against_split_step(const PilotWave& p, const Grid& g, double period, std::size_t steps,
                                   int checkpoints) {
    LinearPropagator prop(g, p.constants(), p.external_potential(), true);
    ComplexField psi = sample_pilot(p, g, 0.0);
    const double dt = period / static_cast<double>(steps);
    double worst = 0.0;
    double t = 0.0;
    const std::size_t chunk = steps / checkpoints;
    for (int c = 0; c < checkpoints; ++c) {
        psi = prop.propagate(std::move(psi), t, dt, chunk);
        t += dt * static_cast<double>(chunk);
        worst = std::max(worst, l2_norm(psi - sample_pilot(p, g, t)));
    }
    return worst;
}

}  // namespace

TEST(PlaneWavePilot, UnitModulusAndConstantPhaseGradient) {
    const PilotWave pw(PlaneWave{Vec3(1.3, -0.4)}, 2, kNatural);
    for (double t : {0.0, 0.7, 3.0})
        for (double x : {-2.0, 0.1, 5.5}) {
            const Vec3 p(x, 0.5 * x);
            EXPECT_NEAR(std::abs(pw.evaluate(t, p)), 1.0, 1e-15);
            const auto pd = phase_data(pw, t, p);
            EXPECT_NEAR(pd.grad_phase[0], 1.3, 1e-14);
            EXPECT_NEAR(pd.grad_phase[1], -0.4, 1e-14);
            EXPECT_NEAR(pd.laplacian_phase, 0.0, 1e-13);
        }
}

TEST(PlaneWavePilot, GuidanceIsMomentumOverMass) {
    const PhysicalConstants c{0.5, 2.0, 1.0, 1.0};
    const PilotWave pw(PlaneWave{Vec3(3.0)}, 1, c);
    EXPECT_NEAR(guidance_velocity(pw, 1.0, Vec3(0.2))[0], 0.5 * 3.0 / 2.0, 1e-15);
}

TEST(CoherentPilot, PeakAmplitudeAtDisplacement) {
    const PhysicalConstants c{0.7, 2.0, 1.0, 1.0};
    const double omega = 1.5;
    const PilotWave cs(CoherentState{omega, Vec3(0.8), Vec3()}, 1, c);
    EXPECT_NEAR(std::abs(cs.evaluate(0.0, Vec3(0.8))), std::pow(2.0 * omega / (M_PI * 0.7), 0.25), 1e-14);
}

TEST(CoherentPilot, SolvesTheLinearEquationOverOnePeriod) {
    const Grid g = make_grid(1, 512, 20.0);
    EXPECT_LT(residual_against_split_step(coherent_1d(), g, 2.0 * M_PI, 6283, 8), 1e-6);
}

TEST(CoherentPilot, PhaseGradientIsUniformInSpace) {
    const auto cs = coherent_1d();
    for (double t : {0.3, 1.1, 2.5}) {
        const double g0 = phase_data(cs, t, Vec3(-1.0)).grad_phase[0];
        for (double x : {0.0, 1.0, 3.0}) EXPECT_NEAR(phase_data(cs, t, Vec3(x)).grad_phase[0], g0, 1e-13);
        EXPECT_NEAR(cs.uniform_phase_gradient(t)->c[0], g0, 1e-13);
    }
}

TEST(CoherentPilot, GuidanceVelocityFollowsCosineTrajectory) {
    const auto cs = coherent_1d(2.0);
    for (double t : {0.0, 0.5, 1.7, 3.9})
        for (double x : {-1.0, 0.0, 2.5}) EXPECT_NEAR(guidance_velocity(cs, t, Vec3(x))[0], -2.0 * std::sin(t), 1e-13);
}

TEST(CoherentPilot, IndependentAxisPhases) {
    const PilotWave cs(CoherentState{1.0, Vec3(1.0, 2.0), Vec3(0.0, 0.5)}, 2, kNatural);
    const Vec3 v = guidance_velocity(cs, 0.8, Vec3(0.3, -0.2));
    EXPECT_NEAR(v[0], -1.0 * std::sin(0.8), 1e-13);
    EXPECT_NEAR(v[1], -2.0 * std::sin(1.3), 1e-13);
}

TEST(FreeGaussianPilot, SolvesTheFreeEquation) {
    const PilotWave fg(FreeGaussian{Vec3(0.5), Vec3(0.8), 1.0}, 1, kNatural);
    const Grid g = make_grid(1, 512, 60.0);
    EXPECT_LT(residual_against_split_step(fg, g, 2.0, 2000, 4), 1e-9);
}

TEST(SuperpositionPilot, SolvesTheHarmonicEquation) {
    const Grid g = make_grid(1, 512, 24.0);
    EXPECT_LT(residual_against_split_step(superposition_1d(), g, 2.0 * M_PI, 6283, 4), 1e-6);
}

TEST(SuperpositionPilot, TwoDimensionalTermsSolveTheEquation) {
    EigenstateSuperposition s;
    s.terms = {{{0, 0, 0}, {1.0, 0.0}}, {{1, 1, 0}, {0.0, 1.0}}, {{2, 0, 0}, {0.6, 0.0}}, {{0, 3, 0}, {0.0, -0.4}}};
    const PilotWave p(s, 2, kNatural);
    const Grid g = make_grid(2, 64, 16.0);
    EXPECT_LT(residual_against_split_step(p, g, 2.0 * M_PI, 2000, 2), 1e-4);
}

TEST(SuperpositionPilot, FirstExcitedStateHasNodeAtOrigin) {
    EigenstateSuperposition s;
    s.terms = {{{1, 0, 0}, {1.0, 0.0}}};
    const PilotWave p(s, 1, kNatural);
    EXPECT_THROW(phase_data(p, 0.3, Vec3(0.0)), NodeProximity);
    EXPECT_THROW(guidance_velocity(p, 0.3, Vec3(0.0)), NodeProximity);
    EXPECT_NO_THROW(phase_data(p, 0.3, Vec3(0.5)));
}

TEST(SuperpositionPilot, RealGroundStateGivesZeroVelocity) {
    EigenstateSuperposition s;
    s.terms = {{{0, 0, 0}, {1.0, 0.0}}};
    const PilotWave p(s, 1, kNatural);
    for (double x : {-2.0, 0.0, 1.3}) EXPECT_NEAR(guidance_velocity(p, 0.9, Vec3(x))[0], 0.0, 1e-14);
}

TEST(SuperpositionPilot, RmsWidthMatchesQuadrature) {
    const auto p = superposition_1d();
    const Grid g = make_grid(1, 512, 24.0);
    for (double t : {0.0, 0.4, 2.2}) EXPECT_NEAR(p.rms_width(t), rms_width(sample_pilot(p, g, t)), 1e-10);
}

TEST(PilotWave, PhaseDataMatchesFiniteDifferences) {
    std::vector<PilotWave> pilots = {
        PilotWave(PlaneWave{Vec3(0.9, -0.3)}, 2, kNatural),
        PilotWave(CoherentState{1.3, Vec3(1.0, -0.5), Vec3(0.0, 1.0)}, 2, kNatural),
        superposition_1d(),
        PilotWave(FreeGaussian{Vec3(0.2, -0.1), Vec3(0.5, 1.0), 0.8}, 2, kNatural),
    };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-1.5, 1.5), ut(0.0, 3.0);
    const double h = 1e-3;
    for (const auto& p : pilots)
        for (int trial = 0; trial < 20; ++trial) {
            const double t = ut(rng);
            Vec3 x;
            for (int a = 0; a < p.dims(); ++a) x[a] = ux(rng);
            if (std::abs(p.evaluate(t, x)) < 1e-3 * p.reference_amplitude(t)) continue;
            const auto pd = phase_data(p, t, x);
            const Vec3 g = fd_grad_phase(p, t, x, h);
            for (int a = 0; a < p.dims(); ++a)
                EXPECT_NEAR(pd.grad_phase[a], g[a], 1e-6 * std::max(1.0, std::abs(g[a]))) << p.kind_name();
            const double lap = fd_laplacian_phase(p, t, x, h);
            EXPECT_NEAR(pd.laplacian_phase, lap, 1e-6 * std::max(1.0, std::abs(lap))) << p.kind_name();
        }
}

TEST(PilotWave, GuidanceIsInvariantUnderComplexRescaling) {
    const auto p = superposition_1d();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> logmag(-20.0, 20.0), ang(-M_PI, M_PI);
    for (int i = 0; i < 50; ++i) {
        const Complex lambda = std::polar(std::exp(logmag(rng)), ang(rng));
        const Vec3 x(0.37);
        const double v0 = guidance_velocity(p, 1.2, x)[0];
        const double v1 = guidance_velocity(p.scaled(lambda), 1.2, x)[0];
        EXPECT_NEAR(v1, v0, 4 * std::numeric_limits<double>::epsilon() * std::abs(v0));
    }
}

TEST(PilotWave, ValidatesParameters) {
    EXPECT_THROW(PilotWave(CoherentState{0.0, Vec3(1.0), Vec3()}, 1, kNatural), InvalidArgument);
    EXPECT_THROW(PilotWave(EigenstateSuperposition{{{{0, 0, 0}, {0.0, 0.0}}}, 1.0}, 1, kNatural), InvalidArgument);
    EXPECT_THROW(PilotWave(EigenstateSuperposition{{{{0, 1, 0}, {1.0, 0.0}}}, 1.0}, 1, kNatural), InvalidArgument);
    EXPECT_THROW(PilotWave(PlaneWave{}, 1, kNatural, Complex{}), InvalidArgument);
}

TEST(NumericPilot, ReproducesAnalyticCoherentState) {
    const auto cs = coherent_1d(1.5);
    const Grid g = make_grid(1, 256, 16.0);
    const auto num = make_numeric_pilot(sample_pilot(cs, g, 0.0), cs.external_potential(), kNatural, 0.0, 2.0, 1e-3, 20);
    for (double t : {0.0, 0.513, 1.25, 2.0})
        for (double x : {-0.9, 0.33, 1.71}) {
            EXPECT_LT(std::abs(num.evaluate(t, Vec3(x)) - cs.evaluate(t, Vec3(x))), 1e-6);
            EXPECT_NEAR(guidance_velocity(num, t, Vec3(x))[0], guidance_velocity(cs, t, Vec3(x))[0], 1e-5);
            EXPECT_NEAR(phase_data(num, t, Vec3(x)).laplacian_phase, 0.0, 1e-4);
        }
}

TEST(NumericPilot, RejectsEvaluationOutsideGridOrTimeRange) {
    const auto cs = coherent_1d(1.0);
    const Grid g = make_grid(1, 128, 16.0);
    const auto num = make_numeric_pilot(sample_pilot(cs, g, 0.0), cs.external_potential(), kNatural, 0.0, 0.5, 1e-2, 5);
    EXPECT_THROW(num.evaluate(0.1, Vec3(9.0)), InvalidArgument);
    EXPECT_THROW(num.evaluate(0.7, Vec3(0.0)), InvalidArgument);
}
