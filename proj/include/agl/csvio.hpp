#pragma once

#include <string>
#include <vector>

namespace agl {

// Shortest round-trip decimal form of x; parsing it back recovers the exact
// same double, which keeps CSV round-trips bit-exact.
std::string format_double(double x);

// Strict double parse of a whole field; throws DataError naming the 1-based
// row/column coordinates on failure.
double parse_double_field(const std::string& field, const std::string& path, std::size_t row,
                          std::size_t col);

std::vector<std::string> split_csv_line(const std::string& line);

// Reads all lines (LF or CRLF); throws IoError if the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace agl
