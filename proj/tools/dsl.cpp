#include "dsl/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr const char* version = "0.1.0";

void print_constants(std::ostream& os) {
    os << "dsl " << version << "\n"
       << "compiled constants (CODATA 2018, SI):\n";
    char line[96];
    for (const auto& [name, value, unit] : {std::tuple{"hbar", dsl::codata::hbar, "J s"},
                                           std::tuple{"G", dsl::codata::G, "m^3 kg^-1 s^-2"},
                                           std::tuple{"c", dsl::codata::c, "m s^-1"},
                                           std::tuple{"electron_mass", dsl::codata::electron_mass, "kg"},
                                           std::tuple{"neutron_mass", dsl::codata::neutron_mass, "kg"}}) {
        std::snprintf(line, sizeof line, "  %-14s %.10e %s\n", name, value, unit);
        os << line;
    }
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

int execute(dsl::ScenarioKind kind, const Options& o) {
    dsl::Scenario s;
    try {
        s = dsl::parse_scenario_file(o.config, kind);
    } catch (const dsl::Error& e) {
        std::cerr << "dsl: " << o.config << ": " << e.what() << '\n';
        return dsl::exit_error;
    }
    if (o.seed) s.seed = *o.seed;
    if (o.out) s.out_dir = *o.out;
    try {
        const auto rep = dsl::run(s);
        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
        if (rep.summary.contains("error")) std::cerr << "dsl: " << rep.summary["error"].get<std::string>() << '\n';
        std::cout << rep.status << ' ' << s.out_dir << "/summary.json\n";
        return rep.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "dsl: " << e.what() << '\n';
        return dsl::exit_error;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"de Broglie double-solution numerical lab"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print version and the compiled constants table");

    Options opt;
    std::vector<std::pair<CLI::App*, dsl::ScenarioKind>> subs;
    const std::pair<const char*, const char*> kinds[] = {
        {"evolve", "Evolve a soliton in a pilot wave (PDE)"},
        {"gaussian", "Integrate the Gaussian-soliton parameter ODEs"},
        {"trajectories", "Integrate guidance trajectories of an ensemble"},
        {"relax", "Track relaxation of a non-Born ensemble"},
        {"phases", "Gravitational phase tables and spin density matrices"},
        {"selfgrav", "Self-gravitational potential profile of a sphere"},
    };
    for (const auto& [name, help] : kinds) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "RNG seed (overrides the scenario)");
        sub->add_option("--out", opt.out, "Output directory (overrides the scenario)");
        subs.emplace_back(sub, dsl::scenario_kind_from_string(name));
    }

    CLI11_PARSE(app, argc, argv);

    if (show_version) {
        print_constants(std::cout);
        return 0;
    }
    for (const auto& [sub, kind] : subs)
        if (sub->parsed()) return execute(kind, opt);
    std::cout << app.help();
    return dsl::exit_error;
}
