#pragma once

#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gyronn {

/// Shortest-form-independent 17-significant-digit text; round-trips exactly.
std::string format_double(double v, int precision = 17);
double parse_double(std::string_view text);

/// Minimal CSV writer: comma separated, LF line endings, no quoting.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  ///< lines that started with '#'
};

CsvTable read_csv(std::istream& in);

/// Opens for binary write so LF endings are preserved; creates parent dirs.
std::ofstream open_output(const std::string& path);

}  // namespace gyronn
