#include "ssepwin/io.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>

namespace ssepwin {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf, res.ptr);
}

void write_csv_row(std::ostream& os, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << format_double(values[i]);
    }
    os << '\n';
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

void write_header_comments(std::ostream& os,
                           const std::vector<std::string>& lines) {
    for (const auto& line : lines) os << "# " << line << '\n';
}

}  // namespace ssepwin
