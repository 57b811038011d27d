#include "tailmean/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "tailmean/errors.hpp"

namespace tailmean {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<double> read_values(std::istream& in, std::size_t min_positive) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  std::size_t positive = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    double x = 0.0;
    if (!parse_number(s, x)) {
      if (!seen_content) {
        seen_content = true;  // header
        continue;
      }
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": not a number");
    }
    seen_content = true;
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": value is not finite");
    }
    if (x > 0.0) ++positive;
    values.push_back(x);
  }
  if (in.bad()) throw Error(ErrorKind::InvalidInput, "read error");
  if (positive < min_positive) {
    throw Error(ErrorKind::InvalidInput, "need at least " + std::to_string(min_positive) + " positive values, found " +
                                             std::to_string(positive));
  }
  return values;
}

std::vector<double> read_values_file(const std::string& path, std::size_t min_positive) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  try {
    return read_values(in, min_positive);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_values(std::ostream& out, std::span<const double> values) {
  for (double x : values) out << format_double(x) << '\n';
}

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

}  // namespace tailmean
