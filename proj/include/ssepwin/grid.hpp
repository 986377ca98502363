#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssepwin {

// Values of a profile on the uniform grid u_i = i/m, i = 0..m, stamped with a
// macroscopic time.
struct GridFunction {
    int m = 0;
    std::vector<double> values;  // size m + 1
    double t = 0.0;

    static GridFunction constant(int m, double c, double t = 0.0);
    static GridFunction sample(int m, const std::function<double(double)>& f,
                               double t = 0.0);

    double u(int i) const { return static_cast<double>(i) / m; }
    double eval(double u) const;  // linear interpolation, clamped to [0,1]

    // Trapezoid integral of |this - other| over [0,1]; grids must match.
    double l1_distance(const GridFunction& other) const;
    double max_abs_diff(const GridFunction& other) const;
    double integral() const;  // trapezoid
};

void write_csv(std::ostream& os, const GridFunction& g,
               const std::vector<std::string>& header_lines);
std::string to_json_string(const GridFunction& g,
                           const std::vector<std::string>& meta);

}  // namespace ssepwin
