#pragma once

#include "dsl/field.hpp"

#include <json.hpp>

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace dsl {

inline constexpr int csv_precision = 17;

inline const char* axis_name(int axis) {
    static constexpr const char* names[] = {"x", "y", "z"};
    return names[axis];
}

inline nlohmann::json grid_to_json(const Grid& g) {
    nlohmann::json j;
    j["dims"] = g.dims();
    for (int a = 0; a < g.dims(); ++a) {
        j["points"].push_back(g.points(a));
        j["length"].push_back(g.length(a));
        j["spacing"].push_back(g.spacing(a));
    }
    return j;
}

inline Grid grid_from_json(const nlohmann::json& j) {
    const int dims = j.at("dims").get<int>();
    std::array<std::size_t, 3> pts{1, 1, 1};
    std::array<double, 3> len{1, 1, 1};
    for (int a = 0; a < dims; ++a) {
        pts[a] = j.at("points").at(a).get<std::size_t>();
        len[a] = j.at("length").at(a).get<double>();
    }
    return make_grid(dims, pts, len);
}

/// One row per node: axis coordinates, then Re, then Im.
inline void write_field_csv(const ComplexField& f, std::ostream& os) {
    const auto& g = f.grid();
    for (int a = 0; a < g.dims(); ++a) os << axis_name(a) << ',';
    os << "re,im\n";
    os << std::setprecision(csv_precision);
    for (std::size_t n = 0; n < f.size(); ++n) {
        const Vec3 x = g.position(n);
        for (int a = 0; a < g.dims(); ++a) os << x[a] << ',';
        os << f[n].real() << ',' << f[n].imag() << '\n';
    }
}

/// Reads rows in the write_field_csv layout; rows must be in grid order.
inline ComplexField read_field_csv(const Grid& g, std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("field csv: missing header");
    ComplexField f(g);
    std::size_t n = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (n >= g.size()) throw InvalidArgument("field csv: more rows than grid nodes");
        std::istringstream row(line);
        std::string cell;
        double vals[5];
        int count = 0;
        while (std::getline(row, cell, ',')) {
            if (count >= g.dims() + 2) throw InvalidArgument("field csv: too many columns");
            vals[count++] = std::stod(cell);
        }
        if (count != g.dims() + 2) throw InvalidArgument("field csv: wrong column count");
        f[n++] = Complex(vals[g.dims()], vals[g.dims() + 1]);
    }
    if (n != g.size()) throw InvalidArgument("field csv: fewer rows than grid nodes");
    return f;
}

}  // namespace dsl
