#pragma once

#include "dsl/errors.hpp"
#include "dsl/field_io.hpp"
#include "dsl/pilot_wave.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace dsl {

struct Trajectory {
    int particle = 0;
    std::vector<double> times;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
};

/// Node proximity during trajectory integration; carries the samples
/// accepted before the abort.
class TrajectoryAborted : public NodeProximity {
public:
    TrajectoryAborted(const std::string& what, std::vector<Trajectory> partial)
        : NodeProximity(what), partial_(std::move(partial)) {}
    const std::vector<Trajectory>& partial() const { return partial_; }

private:
    std::vector<Trajectory> partial_;
};

struct GuidanceOptions {
    double node_epsilon = default_node_epsilon;
    // A stage speed above spike_factor times the typical speed triggers step
    // halving, at most max_halvings levels deep.
    double spike_factor = 1e3;
    int max_halvings = 10;
    // Keep every stride-th fixed step (the final time is always kept).
    std::size_t stride = 1;
};

// ---------------------------------------------------------------------------
// N-particle pilot waves built from single-particle analytic pilots.

enum class Symmetry { product, symmetric, antisymmetric };

/// Psi(x_1..x_N) = prod psi_i(x_i) (product) or the (anti)symmetrized sum over
/// permutations. All factors share dims and constants.
class ConfigurationPilot {
public:
    ConfigurationPilot(std::vector<PilotWave> factors, Symmetry sym) : factors_(std::move(factors)), sym_(sym) {
        if (factors_.empty() || factors_.size() > 3) throw InvalidArgument("configuration pilots need 1 to 3 particles");
        for (const auto& f : factors_) {
            if (f.dims() != factors_.front().dims()) throw InvalidArgument("configuration factors differ in dims");
            if (sym_ != Symmetry::product && !(f.constants() == factors_.front().constants()))
                throw InvalidArgument("(anti)symmetrized factors must share their constants");
        }
        std::vector<int> p(factors_.size());
        std::iota(p.begin(), p.end(), 0);
        if (sym_ == Symmetry::product) {
            perms_.push_back({p, 1.0});
        } else {
            do {
                int inversions = 0;
                for (std::size_t i = 0; i < p.size(); ++i)
                    for (std::size_t j = i + 1; j < p.size(); ++j) inversions += p[i] > p[j];
                const double sign = (sym_ == Symmetry::antisymmetric && inversions % 2) ? -1.0 : 1.0;
                perms_.push_back({p, sign});
            } while (std::next_permutation(p.begin(), p.end()));
        }
    }

    std::size_t particles() const { return factors_.size(); }
    int dims() const { return factors_.front().dims(); }
    const std::vector<PilotWave>& factors() const { return factors_; }
    Symmetry symmetry() const { return sym_; }

    Complex evaluate(double t, const std::vector<Vec3>& X) const {
        Complex psi{};
        for (const auto& [perm, sign] : perms_) {
            Complex term{sign, 0.0};
            for (std::size_t i = 0; i < X.size(); ++i) term *= factors_[perm[i]].evaluate(t, X[i]);
            psi += term;
        }
        return psi;
    }

    /// Per-particle guidance (hbar/m_i) Im(grad_i Psi / Psi).
    std::vector<Vec3> velocities(double t, const std::vector<Vec3>& X, double node_epsilon) const {
        const std::size_t n = X.size();
        if (n != factors_.size()) throw InvalidArgument("configuration size differs from particle count");
        if (sym_ == Symmetry::product) {
            std::vector<Vec3> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = guidance_velocity(factors_[i], t, X[i], node_epsilon);
            return v;
        }
        // jets[f][i]: factor f evaluated at particle i.
        std::vector<std::vector<PilotJet>> jets(n, std::vector<PilotJet>(n));
        double ref = 1.0;
        for (std::size_t f = 0; f < n; ++f) {
            ref *= factors_[f].reference_amplitude(t);
            for (std::size_t i = 0; i < n; ++i) jets[f][i] = factors_[f].jet(t, X[i]);
        }
        Complex psi{};
        std::vector<std::array<Complex, 3>> grad(n);
        for (const auto& [perm, sign] : perms_) {
            Complex term{sign, 0.0};
            for (std::size_t i = 0; i < n; ++i) term *= jets[perm[i]][i].value;
            psi += term;
            for (std::size_t i = 0; i < n; ++i) {
                Complex rest{sign, 0.0};
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i) rest *= jets[perm[j]][j].value;
                for (int a = 0; a < dims(); ++a) grad[i][a] += rest * jets[perm[i]][i].gradient[a];
            }
        }
        if (!(std::abs(psi) > node_epsilon * ref))
            throw NodeProximity("configuration-space node at t = " + std::to_string(t));
        const double hm = factors_.front().constants().hbar_over_mass();
        std::vector<Vec3> v(n);
        for (std::size_t i = 0; i < n; ++i)
            for (int a = 0; a < dims(); ++a) v[i][a] = hm * (grad[i][a] / psi).imag();
        return v;
    }

    /// Speed scale used to detect velocity spikes near nodes.
    double typical_speed(double t) const {
        double s = 0.0;
        for (const auto& f : factors_) s = std::max(s, pilot_speed_scale(f, t));
        return s;
    }

    static double pilot_speed_scale(const PilotWave& p, double t) {
        const double hm = p.constants().hbar_over_mass();
        if (const auto* pw = std::get_if<PlaneWave>(&p.kind())) return std::max(hm * norm(pw->k), hm);
        const double w = p.rms_width(t);
        double s = std::isfinite(w) && w > 0.0 ? hm / w : hm;
        if (const auto g = p.uniform_phase_gradient(t)) s = std::max(s, hm * norm(*g));
        return s;
    }

private:
    struct Perm {
        std::vector<int> p;
        double sign;
    };
    std::vector<PilotWave> factors_;
    Symmetry sym_;
    std::vector<Perm> perms_;
};

namespace detail {

class ConfigurationIntegrator {
public:
    ConfigurationIntegrator(const ConfigurationPilot& pilot, const GuidanceOptions& opt, double t0)
        : pilot_(pilot), opt_(opt), vmax_(opt.spike_factor * pilot.typical_speed(t0)) {}

    // Advances X from t by h; halves the step near nodes or velocity spikes.
    void advance(double t, double h, std::vector<Vec3>& X, int depth = 0) const {
        std::vector<Vec3> out;
        const Outcome r = try_rk4(t, h, X, out);
        if (r == Outcome::ok || (r == Outcome::spike && depth >= opt_.max_halvings)) {
            X = std::move(out);
            return;
        }
        if (depth >= opt_.max_halvings)
            throw NodeProximity("guidance step failed near a node after " + std::to_string(depth) +
                                " halvings at t = " + std::to_string(t));
        advance(t, 0.5 * h, X, depth + 1);
        advance(t + 0.5 * h, 0.5 * h, X, depth + 1);
    }

    std::vector<Vec3> velocity(double t, const std::vector<Vec3>& X) const {
        return pilot_.velocities(t, X, opt_.node_epsilon);
    }

private:
    enum class Outcome { ok, spike, node };

    Outcome try_rk4(double t, double h, const std::vector<Vec3>& X, std::vector<Vec3>& out) const {
        const std::size_t n = X.size();
        auto shifted = [&](const std::vector<Vec3>& k, double s) {
            std::vector<Vec3> y = X;
            for (std::size_t i = 0; i < n; ++i) y[i] += s * k[i];
            return y;
        };
        std::array<std::vector<Vec3>, 4> k;
        try {
            k[0] = velocity(t, X);
            k[1] = velocity(t + 0.5 * h, shifted(k[0], 0.5 * h));
            k[2] = velocity(t + 0.5 * h, shifted(k[1], 0.5 * h));
            k[3] = velocity(t + h, shifted(k[2], h));
        } catch (const NodeProximity&) {
            return Outcome::node;
        }
        out = X;
        bool spike = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& ks : k) spike = spike || norm(ks[i]) > vmax_;
            out[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            for (int a = 0; a < 3; ++a)
                if (!std::isfinite(out[i][a])) return Outcome::node;
        }
        return spike ? Outcome::spike : Outcome::ok;
    }

    const ConfigurationPilot& pilot_;
    GuidanceOptions opt_;
    double vmax_;
};

}  // namespace detail

/// RK4 integration of all particles from t0 to t1 with nominal step dt (shrunk
/// slightly so the run ends on t1). Returns one Trajectory per particle with
/// shared time stamps.
inline std::vector<Trajectory> integrate_configuration(const ConfigurationPilot& pilot, std::vector<Vec3> X, double t0,
                                                       double t1, double dt, const GuidanceOptions& opt = {}) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(t1 > t0)) throw InvalidArgument("t1 must exceed t0");
    if (opt.stride == 0) throw InvalidArgument("stride must be positive");
    if (X.size() != pilot.particles()) throw InvalidArgument("initial configuration size differs from particle count");
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(n);

    detail::ConfigurationIntegrator integ(pilot, opt, t0);
    std::vector<Trajectory> out(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) out[i].particle = static_cast<int>(i);
    auto record = [&](double t) {
        const auto v = integ.velocity(t, X);
        for (std::size_t i = 0; i < X.size(); ++i) {
            out[i].times.push_back(t);
            out[i].positions.push_back(X[i]);
            out[i].velocities.push_back(v[i]);
        }
    };
    try {
        record(t0);
    } catch (const NodeProximity& e) {
        throw InvalidArgument(std::string("initial position is at a pilot node: ") + e.what());
    }
    for (std::size_t s = 0; s < n; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        try {
            integ.advance(t, h, X);
            if ((s + 1) % opt.stride == 0 || s + 1 == n) record(t0 + static_cast<double>(s + 1) * h);
        } catch (const NodeProximity& e) {
            throw TrajectoryAborted(e.what(), std::move(out));
        }
    }
    return out;
}

inline Trajectory integrate_trajectory(const PilotWave& pilot, const Vec3& x0, double t0, double t1, double dt,
                                       const GuidanceOptions& opt = {}) {
    const ConfigurationPilot single({pilot}, Symmetry::product);
    return integrate_configuration(single, {x0}, t0, t1, dt, opt).front();
}

inline void write_trajectories_csv(const std::vector<Trajectory>& tr, int dims, std::ostream& os) {
    if (tr.empty()) return;
    os << 't';
    for (const auto& p : tr)
        for (int a = 0; a < dims; ++a) os << ',' << axis_name(a) << p.particle;
    os << '\n' << std::setprecision(csv_precision);
    for (std::size_t k = 0; k < tr.front().times.size(); ++k) {
        os << tr.front().times[k];
        for (const auto& p : tr)
            for (int a = 0; a < dims; ++a) os << ',' << p.positions[k][a];
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Ensembles.

/// Rectangular box split into count[a] equal bins per axis.
struct Bins {
    int dims = 1;
    Vec3 lower;
    Vec3 upper;
    std::array<std::size_t, 3> count{1, 1, 1};

    static Bins uniform(int dims, const Vec3& lower, const Vec3& upper, std::size_t per_axis) {
        Bins b{dims, lower, upper, {1, 1, 1}};
        for (int a = 0; a < dims; ++a) b.count[a] = per_axis;
        b.validate();
        return b;
    }

    void validate() const {
        if (dims < 1 || dims > 3) throw InvalidArgument("bins.dims must be 1, 2 or 3");
        for (int a = 0; a < dims; ++a) {
            if (!(upper[a] > lower[a])) throw InvalidArgument("bins need upper > lower on every axis");
            if (count[a] == 0) throw InvalidArgument("bins need at least one bin per axis");
        }
    }

    std::size_t size() const { return count[0] * count[1] * count[2]; }
    double width(int a) const { return (upper[a] - lower[a]) / static_cast<double>(count[a]); }
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < dims; ++a) v *= width(a);
        return v;
    }
    Vec3 cell_lower(std::size_t flat) const {
        Vec3 x;
        for (int a = 0; a < dims; ++a) {
            x[a] = lower[a] + static_cast<double>(flat % count[a]) * width(a);
            flat /= count[a];
        }
        return x;
    }
    /// Flat bin index, or size() when x lies outside.
    std::size_t index(const Vec3& x) const {
        std::size_t flat = 0, stride = 1;
        for (int a = 0; a < dims; ++a) {
            if (!(x[a] >= lower[a] && x[a] < upper[a])) return size();
            const auto j = std::min(static_cast<std::size_t>((x[a] - lower[a]) / width(a)), count[a] - 1);
            flat += j * stride;
            stride *= count[a];
        }
        return flat;
    }
};

enum class Sampling { born, uniform, histogram };

inline Sampling sampling_from_string(const std::string& s) {
    if (s == "born") return Sampling::born;
    if (s == "uniform") return Sampling::uniform;
    if (s == "histogram") return Sampling::histogram;
    throw InvalidArgument("unknown sampling '" + s + "' (expected born, uniform or histogram)");
}

inline std::string to_string(Sampling s) {
    switch (s) {
        case Sampling::born: return "born";
        case Sampling::uniform: return "uniform";
        default: return "histogram";
    }
}

/// SplitMix64 finalizer; per-sample seeds are splitmix64(seed + (i+1) * gamma).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t sample_seed(std::uint64_t seed, std::size_t i) {
    return splitmix64(seed + (static_cast<std::uint64_t>(i) + 1) * 0x9E3779B97F4A7C15ull);
}

/// Bin-averaged |Psi_L|^2 using q^dims midpoint sub-samples per bin,
/// normalized to unit integral over the box.
inline std::vector<double> born_bin_density(const PilotWave& pilot, double t, const Bins& bins, int q = 4) {
    bins.validate();
    if (pilot.dims() != bins.dims) throw InvalidArgument("pilot and bins dims differ");
    std::vector<double> rho(bins.size());
    std::size_t sub = 1;
    for (int a = 0; a < bins.dims; ++a) sub *= static_cast<std::size_t>(q);
    double total = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const Vec3 lo = bins.cell_lower(b);
        double s = 0.0;
        for (std::size_t k = 0; k < sub; ++k) {
            Vec3 x = lo;
            std::size_t r = k;
            for (int a = 0; a < bins.dims; ++a) {
                x[a] += (static_cast<double>(r % q) + 0.5) / q * bins.width(a);
                r /= q;
            }
            s += std::norm(pilot.evaluate(t, x));
        }
        rho[b] = s / static_cast<double>(sub);
        total += rho[b];
    }
    if (!(total > 0.0)) throw InvalidArgument("pilot density vanishes on the sampling box");
    for (auto& r : rho) r /= total * bins.volume();
    return rho;
}

/// Draws n points: bin chosen by the weights' CDF, position uniform inside the
/// bin. Each sample uses its own generator, so results do not depend on order.
inline std::vector<Vec3> sample_histogram(const Bins& bins, const std::vector<double>& weights, std::size_t n,
                                          std::uint64_t seed) {
    bins.validate();
    if (weights.size() != bins.size()) throw InvalidArgument("histogram weights do not match the bins");
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t b = 0; b < weights.size(); ++b) {
        if (!(weights[b] >= 0.0)) throw InvalidArgument("histogram weights must be non-negative");
        acc += weights[b];
        cdf[b] = acc;
    }
    if (!(acc > 0.0)) throw InvalidArgument("histogram weights sum to zero");
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(sample_seed(seed, i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double target = u(rng) * acc;
        const auto b = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin(),
                                             cdf.size() - 1);
        Vec3 x = bins.cell_lower(b);
        for (int a = 0; a < bins.dims; ++a) x[a] += u(rng) * bins.width(a);
        out[i] = x;
    }
    return out;
}

inline std::vector<Vec3> sample_uniform(const Bins& box, std::size_t n, std::uint64_t seed) {
    Bins one = box;
    one.count = {1, 1, 1};
    return sample_histogram(one, {1.0}, n, seed);
}

/// Born sampling from |Psi_L(t)|^2 tabulated on `table` (fine bins).
inline std::vector<Vec3> sample_born(const PilotWave& pilot, double t, const Bins& table, std::size_t n,
                                     std::uint64_t seed) {
    return sample_histogram(table, born_bin_density(pilot, t, table), n, seed);
}

struct Ensemble {
    Sampling sampling = Sampling::born;
    std::vector<Vec3> initial;
    std::vector<double> times;
    // positions[k][i]: sample i at times[k]. Lost samples keep their last
    // good position and are excluded from statistics.
    std::vector<std::vector<Vec3>> positions;
    std::vector<bool> lost;

    std::size_t size() const { return initial.size(); }
    std::size_t lost_count() const { return static_cast<std::size_t>(std::count(lost.begin(), lost.end(), true)); }

    /// Positions of the samples still alive at time index k.
    std::vector<Vec3> alive(std::size_t k) const {
        std::vector<Vec3> out;
        for (std::size_t i = 0; i < size(); ++i)
            if (!lost[i]) out.push_back(positions[k][i]);
        return out;
    }
};

/// Transports every sample with integrate_trajectory. Samples are
/// independent; `threads` > 1 splits them across worker threads without
/// changing the result.
inline Ensemble evolve_ensemble(const PilotWave& pilot, std::vector<Vec3> initial, Sampling sampling, double t0,
                                double t1, double dt, const GuidanceOptions& opt = {}, unsigned threads = 1) {
    Ensemble e;
    e.sampling = sampling;
    e.initial = std::move(initial);
    const std::size_t n = e.initial.size();
    if (n == 0) throw InvalidArgument("ensemble is empty");
    std::vector<Trajectory> tr(n);
    std::vector<char> lost(n, 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                tr[i] = integrate_trajectory(pilot, e.initial[i], t0, t1, dt, opt);
            } catch (const TrajectoryAborted& a) {
                tr[i] = a.partial().front();
                lost[i] = 1;
            } catch (const InvalidArgument&) {
                lost[i] = 1;
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned k = 0; k < threads; ++k)
            pool.emplace_back(work, std::min(n, k * chunk), std::min(n, (k + 1) * chunk));
        for (auto& th : pool) th.join();
    }
    // Reference time stamps from any complete trajectory.
    for (std::size_t i = 0; i < n; ++i)
        if (!lost[i]) {
            e.times = tr[i].times;
            break;
        }
    if (e.times.empty()) throw NodeProximity("every ensemble trajectory hit a node");
    e.positions.assign(e.times.size(), std::vector<Vec3>(n));
    e.lost.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        e.lost[i] = lost[i] != 0;
        for (std::size_t k = 0; k < e.times.size(); ++k) {
            if (k < tr[i].positions.size()) e.positions[k][i] = tr[i].positions[k];
            else e.positions[k][i] = tr[i].positions.empty() ? e.initial[i] : tr[i].positions.back();
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Relaxation diagnostics.

inline constexpr double relaxation_smoothing = 1e-12;

/// Coarse-grained H = sum_bins rho ln(rho / |psi|^2) * bin_volume with
/// rho the sample histogram density and |psi|^2 the bin-averaged Born
/// density, both normalized on the box. Samples must lie inside the box.
inline double relaxation_h(const std::vector<Vec3>& samples, const PilotWave& pilot, double t, const Bins& bins) {
    if (samples.empty()) throw InvalidArgument("relaxation_h needs samples");
    const auto born = born_bin_density(pilot, t, bins);
    std::vector<double> rho(bins.size(), 0.0);
    for (const auto& x : samples) {
        const auto b = bins.index(x);
        if (b == bins.size()) throw InvalidArgument("sample outside the relaxation bins");
        rho[b] += 1.0;
    }
    const double v = bins.volume();
    const double scale = 1.0 / (static_cast<double>(samples.size()) * v);
    double h = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const double r = rho[b] * scale;
        if (r > 0.0) h += r * std::log((r + relaxation_smoothing) / (born[b] + relaxation_smoothing)) * v;
    }
    return h;
}

/// Default relaxation bins: 64 per axis.
inline Bins default_relaxation_bins(int dims, const Vec3& lower, const Vec3& upper) {
    return Bins::uniform(dims, lower, upper, 64);
}

/// Kolmogorov-Smirnov statistic sup |F_n(x) - F(x)| of the samples against
/// a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw InvalidArgument("ks_statistic needs samples");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Critical KS value at 1% significance (asymptotic).
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Marginal CDF of |Psi_L(t)|^2 along one axis, tabulated on `table` and
/// linearly interpolated.
inline std::function<double(double)> born_marginal_cdf(const PilotWave& pilot, double t, const Bins& table, int axis) {
    const auto rho = born_bin_density(pilot, t, table);
    std::vector<double> marg(table.count[axis], 0.0);
    for (std::size_t b = 0; b < table.size(); ++b) {
        std::size_t r = b;
        for (int a = 0; a < axis; ++a) r /= table.count[a];
        marg[r % table.count[axis]] += rho[b] * table.volume();
    }
    std::vector<double> edges(marg.size() + 1, 0.0);
    for (std::size_t j = 0; j < marg.size(); ++j) edges[j + 1] = edges[j] + marg[j];
    const double lo = table.lower[axis], w = table.width(axis);
    return [edges, lo, w](double x) {
        const double s = (x - lo) / w;
        if (s <= 0.0) return 0.0;
        const auto j = static_cast<std::size_t>(s);
        if (j + 1 >= edges.size()) return 1.0;
        const double f = s - static_cast<double>(j);
        return edges[j] + f * (edges[j + 1] - edges[j]);
    };
}

}  // namespace dsl
