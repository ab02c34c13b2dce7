#pragma once

#include "dsl/constants.hpp"
#include "dsl/errors.hpp"
#include "dsl/gravity_experiment.hpp"
#include "dsl/guidance.hpp"
#include "dsl/pilot_wave.hpp"
#include "dsl/soliton.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dsl {

using nlohmann::json;

/// Configuration error; the message starts with the offending field path.
class SchemaError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

// Walks one JSON object, remembering which keys were consumed so that
// finish() can reject the rest.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        if (!has(key)) fail(field(key), "is required");
        seen_.insert(key);
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key) {
        const json& v = raw(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            fail(field(key), "has the wrong type");
        }
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    double positive(const std::string& key) {
        const double v = get<double>(key);
        if (!(v > 0.0)) fail(field(key), "must be > 0");
        return v;
    }

    Vec3 vec(const std::string& key, int dims) {
        const json& v = raw(key);
        if (!v.is_array() || static_cast<int>(v.size()) != dims)
            fail(field(key), "must be an array of " + std::to_string(dims) + " numbers");
        Vec3 out;
        for (int a = 0; a < dims; ++a) {
            if (!v[a].is_number()) fail(field(key) + "[" + std::to_string(a) + "]", "must be a number");
            out[a] = v[a].get<double>();
        }
        return out;
    }

    Vec3 vec_or(const std::string& key, int dims, Vec3 fallback) { return has(key) ? vec(key, dims) : fallback; }

    ObjectReader child(const std::string& key) { return ObjectReader(raw(key), field(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(field(it.key()), "is not a recognised key");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw SchemaError(path + " " + what);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json vec_json(const Vec3& v, int dims) {
    json a = json::array();
    for (int i = 0; i < dims; ++i) a.push_back(v[i]);
    return a;
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from(ObjectReader& r, const std::string& key) {
    const json& v = r.raw(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        ObjectReader::fail(r.field(key), "must be a number or a [re, im] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

enum class ScenarioKind { evolve, gaussian, trajectories, relax, phases, selfgrav };

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "evolve") return ScenarioKind::evolve;
    if (s == "gaussian") return ScenarioKind::gaussian;
    if (s == "trajectories") return ScenarioKind::trajectories;
    if (s == "relax") return ScenarioKind::relax;
    if (s == "phases") return ScenarioKind::phases;
    if (s == "selfgrav") return ScenarioKind::selfgrav;
    throw SchemaError("kind must be one of evolve, gaussian, trajectories, relax, phases, selfgrav (got '" + s + "')");
}

inline std::string to_string(ScenarioKind k) {
    static constexpr const char* names[] = {"evolve", "gaussian", "trajectories", "relax", "phases", "selfgrav"};
    return names[static_cast<int>(k)];
}

inline bool is_dynamic(ScenarioKind k) { return k != ScenarioKind::phases && k != ScenarioKind::selfgrav; }

struct TimeControls {
    double t0 = 0.0;
    double t_final = 0.0;
    double dt = 0.0;               // default (t_final - t0) / 1000
    std::size_t sample_every = 1;  // steps between recorded samples
};

struct GridSpec {
    std::array<std::size_t, 3> points{256, 256, 256};
    std::array<double, 3> length{0.0, 0.0, 0.0};
};

struct EnsembleSpec {
    std::size_t size = 1000;
    Sampling sampling = Sampling::born;
    Vec3 lower, upper;                   // sampling box
    std::size_t table_bins = 0;          // per axis; default 4096 / 256 / 64 by dims
    std::vector<double> weights;         // histogram sampling only
    std::vector<Vec3> initial;           // explicit positions override sampling
};

struct RelaxSpec {
    Vec3 lower, upper;
    std::size_t bins = 64;  // per axis
};

struct SelfGravSpec {
    double mass = 0.0;
    double radius = 0.0;
    double d_max = 0.0;        // default 10 radius
    std::size_t points = 201;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::evolve;
    PhysicalConstants constants;
    int dims = 1;
    std::optional<PilotKind> pilot;
    std::optional<SolitonProfile> soliton;
    GridSpec grid;
    TimeControls time;
    EnsembleSpec ensemble;
    RelaxSpec relax;
    ExperimentConfig experiment;
    std::optional<BranchProbabilities> branch_probabilities;
    SelfGravSpec selfgrav;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool fail_on_breach = true;
    double breach_threshold = 0.2;  // width_ratio above this is an ApproximationBreach
    unsigned threads = 1;

    PilotWave pilot_wave() const {
        if (!pilot) throw SchemaError("pilot is required for " + to_string(kind));
        return PilotWave(*pilot, dims, constants);
    }

    Grid make_grid() const { return Grid(dims, grid.points, grid.length); }
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline PilotKind parse_pilot(ObjectReader r, int dims) {
    const auto type = r.get<std::string>("type");
    PilotKind out;
    if (type == "plane_wave") {
        out = PlaneWave{r.vec("k", dims)};
    } else if (type == "coherent") {
        out = CoherentState{r.get_or("omega", 1.0), r.vec("amplitude", dims), r.vec_or("phase", dims, Vec3())};
    } else if (type == "free_gaussian") {
        out = FreeGaussian{r.vec_or("center", dims, Vec3()), r.vec_or("k", dims, Vec3()), r.get_or("sigma0", 1.0)};
    } else if (type == "superposition") {
        EigenstateSuperposition s;
        s.omega = r.get_or("omega", 1.0);
        const json& terms = r.raw("terms");
        if (!terms.is_array() || terms.empty()) ObjectReader::fail(r.field("terms"), "must be a non-empty array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            ObjectReader t(terms[i], r.field("terms") + "[" + std::to_string(i) + "]");
            EigenstateSuperposition::Term term;
            const json& n = t.raw("n");
            if (!n.is_array() || static_cast<int>(n.size()) != dims)
                ObjectReader::fail(t.field("n"), "must hold " + std::to_string(dims) + " quantum numbers");
            for (int a = 0; a < dims; ++a) {
                if (!n[a].is_number_integer() || n[a].get<int>() < 0)
                    ObjectReader::fail(t.field("n"), "entries must be non-negative integers");
                term.n[a] = n[a].get<int>();
            }
            term.coefficient = complex_from(t, "c");
            t.finish();
            s.terms.push_back(term);
        }
        out = s;
    } else {
        ObjectReader::fail(r.field("type"), "must be plane_wave, coherent, free_gaussian or superposition");
    }
    r.finish();
    return out;
}

inline json pilot_json(const PilotKind& k, int dims) {
    json j;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PlaneWave>) {
                j = {{"type", "plane_wave"}, {"k", vec_json(p.k, dims)}};
            } else if constexpr (std::is_same_v<T, CoherentState>) {
                j = {{"type", "coherent"},
                     {"omega", p.omega},
                     {"amplitude", vec_json(p.amplitude, dims)},
                     {"phase", vec_json(p.phase, dims)}};
            } else if constexpr (std::is_same_v<T, FreeGaussian>) {
                j = {{"type", "free_gaussian"},
                     {"center", vec_json(p.center, dims)},
                     {"k", vec_json(p.k, dims)},
                     {"sigma0", p.sigma0}};
            } else if constexpr (std::is_same_v<T, EigenstateSuperposition>) {
                json terms = json::array();
                for (const auto& t : p.terms) {
                    json n = json::array();
                    for (int a = 0; a < dims; ++a) n.push_back(t.n[a]);
                    terms.push_back({{"n", n}, {"c", complex_json(t.coefficient)}});
                }
                j = {{"type", "superposition"}, {"omega", p.omega}, {"terms", terms}};
            } else {
                throw InvalidArgument("numeric pilots cannot be serialized into a scenario");
            }
        },
        k);
    return j;
}

inline std::array<std::array<double, 2>, 2> parse_matrix2(ObjectReader& r, const std::string& key) {
    const json& v = r.raw(key);
    std::array<std::array<double, 2>, 2> m{};
    if (!v.is_array() || v.size() != 2) ObjectReader::fail(r.field(key), "must be a 2x2 array");
    for (int i = 0; i < 2; ++i) {
        if (!v[i].is_array() || v[i].size() != 2) ObjectReader::fail(r.field(key), "must be a 2x2 array");
        for (int j = 0; j < 2; ++j) {
            if (!v[i][j].is_number()) ObjectReader::fail(r.field(key), "entries must be numbers");
            m[i][j] = v[i][j].get<double>();
        }
    }
    return m;
}

inline json matrix2_json(const std::array<std::array<double, 2>, 2>& m) {
    return json::array({json::array({m[0][0], m[0][1]}), json::array({m[1][0], m[1][1]})});
}

inline ExperimentConfig parse_experiment(ObjectReader r, const PhysicalConstants& c) {
    ExperimentConfig e;
    e.constants = c;
    e.m_A = r.positive("m_A");
    e.m_B = r.positive("m_B");
    e.R_A = r.positive("R_A");
    e.R_B = r.positive("R_B");
    e.tau = r.get<double>("tau");
    e.d = parse_matrix2(r, "d");
    e.intra_A = r.positive("intra_A");
    e.intra_B = r.positive("intra_B");
    if (r.has("alpha_A")) e.amp_A[0] = complex_from(r, "alpha_A");
    if (r.has("beta_A")) e.amp_A[1] = complex_from(r, "beta_A");
    if (r.has("alpha_B")) e.amp_B[0] = complex_from(r, "alpha_B");
    if (r.has("beta_B")) e.amp_B[1] = complex_from(r, "beta_B");
    r.finish();
    try {
        e.validate();
    } catch (const InvalidArgument& ex) {
        throw SchemaError(std::string("experiment is invalid: ") + ex.what());
    }
    return e;
}

}  // namespace detail

/// Default dt divisor and grid size.
inline constexpr double default_steps = 1000.0;
inline constexpr std::size_t default_points = 256;

inline Scenario parse_scenario(const json& j, std::optional<ScenarioKind> expected = std::nullopt) {
    using detail::ObjectReader;
    ObjectReader r(j, "");
    Scenario s;
    if (r.has("kind")) s.kind = scenario_kind_from_string(r.get<std::string>("kind"));
    else if (expected) s.kind = *expected;
    else ObjectReader::fail("kind", "is required");
    if (expected && *expected != s.kind)
        ObjectReader::fail("kind", "is '" + to_string(s.kind) + "' but the subcommand is '" + to_string(*expected) + "'");

    s.seed = r.get_or<std::uint64_t>("seed", 0);
    s.fail_on_breach = r.get_or("fail_on_breach", true);
    if (r.has("breach_threshold")) s.breach_threshold = r.positive("breach_threshold");
    s.threads = r.get_or<unsigned>("threads", 1);
    if (s.threads == 0) ObjectReader::fail("threads", "must be >= 1");
    if (r.has("output")) {
        auto o = r.child("output");
        s.out_dir = o.get_or<std::string>("dir", s.out_dir);
        o.finish();
    }

    if (is_dynamic(s.kind)) {
        auto c = r.child("constants");
        s.constants.hbar = c.positive("hbar");
        s.constants.mass = c.positive("mass");
        s.constants.G = c.has("G") ? c.positive("G") : 1.0;
        s.constants.c = c.has("c") ? c.positive("c") : 1.0;
        c.finish();
    } else {
        s.constants = PhysicalConstants::si(1.0);
        if (r.has("constants")) {
            auto c = r.child("constants");
            if (c.has("hbar")) s.constants.hbar = c.positive("hbar");
            if (c.has("G")) s.constants.G = c.positive("G");
            if (c.has("c")) s.constants.c = c.positive("c");
            if (c.has("mass")) s.constants.mass = c.positive("mass");
            c.finish();
        }
    }

    s.dims = r.get_or("dims", 1);
    if (s.dims < 1 || s.dims > 3) ObjectReader::fail("dims", "must be 1, 2 or 3");

    if (is_dynamic(s.kind)) {
        s.pilot = detail::parse_pilot(r.child("pilot"), s.dims);
        try {
            s.pilot_wave();
        } catch (const SchemaError&) {
            throw;
        } catch (const InvalidArgument& e) {
            ObjectReader::fail("pilot", std::string("is invalid: ") + e.what());
        }

        auto t = r.child("time");
        s.time.t0 = t.get_or("t0", 0.0);
        s.time.t_final = t.get<double>("t_final");
        if (!(s.time.t_final > s.time.t0)) ObjectReader::fail(t.field("t_final"), "must exceed time.t0");
        s.time.dt = t.has("dt") ? t.positive("dt") : (s.time.t_final - s.time.t0) / default_steps;
        s.time.sample_every = t.get_or<std::size_t>("sample_every", 1);
        if (s.time.sample_every == 0) ObjectReader::fail(t.field("sample_every"), "must be >= 1");
        t.finish();
    }

    if (s.kind == ScenarioKind::evolve || s.kind == ScenarioKind::gaussian) {
        auto so = r.child("soliton");
        SolitonProfile p;
        p.shape = so.has("shape") ? [&] {
            try {
                return profile_shape_from_string(so.get<std::string>("shape"));
            } catch (const InvalidArgument&) {
                ObjectReader::fail(so.field("shape"), "must be gaussian, sech or raised_cosine");
            }
        }() : ProfileShape::gaussian;
        p.center = so.vec_or("center", s.dims, Vec3());
        p.scale = so.positive("scale");
        p.momentum = so.vec_or("momentum", s.dims, Vec3());
        so.finish();
        if (s.kind == ScenarioKind::gaussian && p.shape != ProfileShape::gaussian)
            ObjectReader::fail(so.field("shape"), "must be gaussian for the gaussian subcommand");
        s.soliton = p;
    }

    if (s.kind == ScenarioKind::evolve || s.kind == ScenarioKind::gaussian) {
        auto g = r.child("grid");
        const json& pts = g.has("points") ? g.raw("points") : json(default_points);
        const json& len = g.raw("length");
        for (int a = 0; a < s.dims; ++a) {
            const json& pa = pts.is_array() ? pts.at(std::min<std::size_t>(a, pts.size() - 1)) : pts;
            const json& la = len.is_array() ? len.at(std::min<std::size_t>(a, len.size() - 1)) : len;
            if (!pa.is_number_integer()) ObjectReader::fail(g.field("points"), "must be an integer or array of integers");
            if (!la.is_number()) ObjectReader::fail(g.field("length"), "must be a number or array of numbers");
            s.grid.points[a] = pa.get<std::size_t>();
            s.grid.length[a] = la.get<double>();
        }
        g.finish();
        try {
            s.make_grid();
        } catch (const InvalidArgument& e) {
            ObjectReader::fail("grid", std::string("is invalid: ") + e.what());
        }
    }

    if (s.kind == ScenarioKind::trajectories || s.kind == ScenarioKind::relax) {
        auto e = r.child("ensemble");
        if (e.has("initial")) {
            const json& init = e.raw("initial");
            if (!init.is_array() || init.empty()) ObjectReader::fail(e.field("initial"), "must be a non-empty array");
            for (std::size_t i = 0; i < init.size(); ++i) {
                const std::string f = e.field("initial") + "[" + std::to_string(i) + "]";
                if (!init[i].is_array() || static_cast<int>(init[i].size()) != s.dims)
                    ObjectReader::fail(f, "must be an array of " + std::to_string(s.dims) + " numbers");
                Vec3 x;
                for (int a = 0; a < s.dims; ++a) x[a] = init[i][a].get<double>();
                s.ensemble.initial.push_back(x);
            }
            s.ensemble.size = s.ensemble.initial.size();
            s.ensemble.sampling = Sampling::histogram;
        }
        if (s.ensemble.initial.empty() || e.has("lower")) {
            s.ensemble.size = e.get_or<std::size_t>("size", s.ensemble.size);
            if (s.ensemble.size == 0) ObjectReader::fail(e.field("size"), "must be >= 1");
            try {
                s.ensemble.sampling = sampling_from_string(e.get_or<std::string>("sampling", "born"));
            } catch (const InvalidArgument&) {
                ObjectReader::fail(e.field("sampling"), "must be born, uniform or histogram");
            }
            s.ensemble.lower = e.vec("lower", s.dims);
            s.ensemble.upper = e.vec("upper", s.dims);
            for (int a = 0; a < s.dims; ++a)
                if (!(s.ensemble.upper[a] > s.ensemble.lower[a])) ObjectReader::fail(e.field("upper"), "must exceed lower");
            const std::size_t def[] = {4096, 256, 64};
            s.ensemble.table_bins = e.get_or<std::size_t>("table_bins", def[s.dims - 1]);
            if (s.ensemble.table_bins == 0) ObjectReader::fail(e.field("table_bins"), "must be >= 1");
            if (s.ensemble.sampling == Sampling::histogram) {
                s.ensemble.weights = e.get<std::vector<double>>("weights");
                std::size_t need = 1;
                for (int a = 0; a < s.dims; ++a) need *= s.ensemble.table_bins;
                if (s.ensemble.weights.size() != need)
                    ObjectReader::fail(e.field("weights"), "must hold table_bins^dims = " + std::to_string(need) + " entries");
            }
        }
        e.finish();
    }

    if (s.kind == ScenarioKind::relax) {
        auto b = r.child("relax");
        s.relax.lower = b.vec("lower", s.dims);
        s.relax.upper = b.vec("upper", s.dims);
        for (int a = 0; a < s.dims; ++a)
            if (!(s.relax.upper[a] > s.relax.lower[a])) ObjectReader::fail(b.field("upper"), "must exceed lower");
        s.relax.bins = b.get_or<std::size_t>("bins", 64);
        if (s.relax.bins == 0) ObjectReader::fail(b.field("bins"), "must be >= 1");
        b.finish();
    }

    if (s.kind == ScenarioKind::phases) {
        s.experiment = detail::parse_experiment(r.child("experiment"), s.constants);
        if (r.has("branch_probabilities")) s.branch_probabilities = detail::parse_matrix2(r, "branch_probabilities");
    }

    if (s.kind == ScenarioKind::selfgrav) {
        auto g = r.child("selfgrav");
        s.selfgrav.mass = g.positive("mass");
        s.selfgrav.radius = g.positive("radius");
        s.selfgrav.d_max = g.has("d_max") ? g.positive("d_max") : 10.0 * s.selfgrav.radius;
        s.selfgrav.points = g.get_or<std::size_t>("points", 201);
        if (s.selfgrav.points < 2) ObjectReader::fail(g.field("points"), "must be >= 2");
        g.finish();
    }

    r.finish();
    return s;
}

inline Scenario parse_scenario_file(const std::string& path, std::optional<ScenarioKind> expected = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open scenario file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": invalid JSON: " + e.what());
    }
    return parse_scenario(j, expected);
}

inline json constants_json(const PhysicalConstants& c) {
    return {{"hbar", c.hbar}, {"mass", c.mass}, {"G", c.G}, {"c", c.c}};
}

/// Fully resolved scenario; parse_scenario(to_json(s)) reproduces s.
inline json to_json(const Scenario& s) {
    using detail::vec_json;
    json j;
    j["kind"] = to_string(s.kind);
    j["seed"] = s.seed;
    j["fail_on_breach"] = s.fail_on_breach;
    j["breach_threshold"] = s.breach_threshold;
    j["threads"] = s.threads;
    j["output"] = {{"dir", s.out_dir}};
    j["dims"] = s.dims;
    if (is_dynamic(s.kind)) {
        j["constants"] = constants_json(s.constants);
        j["pilot"] = detail::pilot_json(*s.pilot, s.dims);
        j["time"] = {{"t0", s.time.t0}, {"t_final", s.time.t_final}, {"dt", s.time.dt}, {"sample_every", s.time.sample_every}};
    } else {
        j["constants"] = {{"hbar", s.constants.hbar}, {"G", s.constants.G}, {"c", s.constants.c}};
    }
    if (s.soliton) {
        j["soliton"] = {{"shape", to_string(s.soliton->shape)},
                        {"center", vec_json(s.soliton->center, s.dims)},
                        {"scale", s.soliton->scale},
                        {"momentum", vec_json(s.soliton->momentum, s.dims)}};
        json pts = json::array(), len = json::array();
        for (int a = 0; a < s.dims; ++a) {
            pts.push_back(s.grid.points[a]);
            len.push_back(s.grid.length[a]);
        }
        j["grid"] = {{"points", pts}, {"length", len}};
    }
    if (s.kind == ScenarioKind::trajectories || s.kind == ScenarioKind::relax) {
        json e;
        if (!s.ensemble.initial.empty()) {
            json init = json::array();
            for (const auto& x : s.ensemble.initial) init.push_back(vec_json(x, s.dims));
            e["initial"] = init;
        } else {
            e["size"] = s.ensemble.size;
            e["sampling"] = to_string(s.ensemble.sampling);
            e["lower"] = vec_json(s.ensemble.lower, s.dims);
            e["upper"] = vec_json(s.ensemble.upper, s.dims);
            e["table_bins"] = s.ensemble.table_bins;
            if (s.ensemble.sampling == Sampling::histogram) e["weights"] = s.ensemble.weights;
        }
        j["ensemble"] = e;
    }
    if (s.kind == ScenarioKind::relax)
        j["relax"] = {{"lower", vec_json(s.relax.lower, s.dims)}, {"upper", vec_json(s.relax.upper, s.dims)}, {"bins", s.relax.bins}};
    if (s.kind == ScenarioKind::phases) {
        const auto& e = s.experiment;
        json x = {{"m_A", e.m_A}, {"m_B", e.m_B}, {"R_A", e.R_A}, {"R_B", e.R_B}, {"tau", e.tau},
                  {"d", detail::matrix2_json(e.d)},
                  {"alpha_A", detail::complex_json(e.amp_A[0])}, {"beta_A", detail::complex_json(e.amp_A[1])},
                  {"alpha_B", detail::complex_json(e.amp_B[0])}, {"beta_B", detail::complex_json(e.amp_B[1])}};
        x["intra_A"] = *e.intra_A;
        x["intra_B"] = *e.intra_B;
        j["experiment"] = x;
        if (s.branch_probabilities) j["branch_probabilities"] = detail::matrix2_json(*s.branch_probabilities);
    }
    if (s.kind == ScenarioKind::selfgrav)
        j["selfgrav"] = {{"mass", s.selfgrav.mass}, {"radius", s.selfgrav.radius}, {"d_max", s.selfgrav.d_max},
                         {"points", s.selfgrav.points}};
    return j;
}

}  // namespace dsl
