#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tailmean {

// One value per line. A non-numeric first line is taken as a header and blank
// lines are skipped. Throws InvalidInput on any other unparsable line, on
// non-finite values, or when fewer than `min_positive` values are positive.
// Values <= 0 are kept.
std::vector<double> read_values(std::istream& in, std::size_t min_positive = 4);
std::vector<double> read_values_file(const std::string& path, std::size_t min_positive = 4);

void write_values(std::ostream& out, std::span<const double> values);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace tailmean
