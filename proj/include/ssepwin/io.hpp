#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ssepwin {

// Shortest round-trip decimal form of a double (std::to_chars), so CSV bodies
// are byte-stable across reruns and readable.
std::string format_double(double v);

void write_csv_row(std::ostream& os, std::span<const double> values);
void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

// "# key" comment lines carrying provenance (parameter echo, seeds, ...).
void write_header_comments(std::ostream& os,
                           const std::vector<std::string>& lines);

}  // namespace ssepwin
