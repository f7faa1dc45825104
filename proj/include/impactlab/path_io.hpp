#ifndef IMPACTLAB_PATH_IO_HPP
#define IMPACTLAB_PATH_IO_HPP

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadlag_path.hpp"

namespace impactlab {

/// Each knot is written as {t, left, right, kind}; `kind` names the segment
/// that starts at the knot (the last knot always reports "constant").
inline nlohmann::json path_to_json(const CadlagPath& x) {
    nlohmann::json a = nlohmann::json::array();
    const auto& k = x.knots();
    for (std::size_t i = 0; i < k.size(); ++i) {
        std::string kind = (i + 1 < k.size() && x.kinds()[i] == SegmentKind::linear) ? "linear" : "constant";
        a.push_back({{"t", k[i].t}, {"left", k[i].left}, {"right", k[i].right}, {"kind", kind}});
    }
    return a;
}

inline CadlagPath path_from_json(const nlohmann::json& a) {
    if (!a.is_array() || a.size() < 2) throw std::invalid_argument("path JSON must be an array of at least two knots");
    std::vector<Knot> knots;
    std::vector<SegmentKind> kinds;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& e = a[i];
        knots.push_back({e.at("t").get<double>(), e.at("left").get<double>(), e.at("right").get<double>()});
        if (i + 1 < a.size()) {
            std::string kind = e.value("kind", std::string("linear"));
            if (kind == "constant") kinds.push_back(SegmentKind::constant);
            else if (kind == "linear") kinds.push_back(SegmentKind::linear);
            else throw std::invalid_argument("unknown segment kind '" + kind + "'");
        }
    }
    return CadlagPath(std::move(knots), std::move(kinds));
}

inline CadlagPath read_path_json(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    nlohmann::json j;
    in >> j;
    return path_from_json(j);
}

inline void write_path_json(const CadlagPath& x, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << std::setprecision(17) << path_to_json(x).dump(2) << '\n';
}

/// Samples x on `grid` as "t,value" rows.
inline void write_path_csv(std::ostream& out, const CadlagPath& x, const std::vector<double>& grid) {
    out << "t,value\n" << std::setprecision(17);
    for (double t : grid) out << t << ',' << x.eval(t) << '\n';
}

/// Knot-exact CSV: one row per knot with both one-sided values.
inline void write_knots_csv(std::ostream& out, const CadlagPath& x) {
    out << "t,left,right\n" << std::setprecision(17);
    for (const auto& k : x.knots()) out << k.t << ',' << k.left << ',' << k.right << '\n';
}

inline std::vector<double> uniform_grid(double a, double b, std::size_t cells) {
    std::vector<double> g(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(cells);
    g.back() = b;
    return g;
}

}  // namespace impactlab

#endif
