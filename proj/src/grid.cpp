#include "ssepwin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ssepwin/io.hpp"

namespace ssepwin {

GridFunction GridFunction::constant(int m, double c, double t) {
    GridFunction g;
    g.m = m;
    g.values.assign(m + 1, c);
    g.t = t;
    return g;
}

GridFunction GridFunction::sample(int m, const std::function<double(double)>& f,
                                  double t) {
    GridFunction g;
    g.m = m;
    g.values.resize(m + 1);
    for (int i = 0; i <= m; ++i) g.values[i] = f(g.u(i));
    g.t = t;
    return g;
}

double GridFunction::eval(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    const double x = u * m;
    const int i = std::min(static_cast<int>(x), m - 1);
    const double w = x - i;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

double GridFunction::l1_distance(const GridFunction& other) const {
    if (other.m != m) throw std::invalid_argument("grid mismatch in l1_distance");
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double d = std::abs(values[i] - other.values[i]);
        s += (i == 0 || i == m) ? 0.5 * d : d;
    }
    return s / m;
}

double GridFunction::max_abs_diff(const GridFunction& other) const {
    if (other.m != m) throw std::invalid_argument("grid mismatch in max_abs_diff");
    double s = 0.0;
    for (int i = 0; i <= m; ++i)
        s = std::max(s, std::abs(values[i] - other.values[i]));
    return s;
}

double GridFunction::integral() const {
    double s = 0.0;
    for (int i = 0; i <= m; ++i)
        s += (i == 0 || i == m) ? 0.5 * values[i] : values[i];
    return s / m;
}

void write_csv(std::ostream& os, const GridFunction& g,
               const std::vector<std::string>& header_lines) {
    write_header_comments(os, header_lines);
    os << "u,value\n";
    for (int i = 0; i <= g.m; ++i) {
        os << format_double(g.u(i)) << ',' << format_double(g.values[i]) << '\n';
    }
}

std::string to_json_string(const GridFunction& g,
                           const std::vector<std::string>& meta) {
    nlohmann::json j;
    j["m"] = g.m;
    j["t"] = g.t;
    j["values"] = g.values;
    j["meta"] = meta;
    return j.dump(2);
}

}  // namespace ssepwin
