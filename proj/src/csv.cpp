#include "gyronn/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>

#include "gyronn/errors.hpp"

namespace gyronn {

std::string format_double(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ValidationError("not a number: '" + std::string(text) + "'");
  return v;
}

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = l.find(',', start);
      cells.push_back(l.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      table.header = split(line);
      have_header = true;
    } else {
      table.rows.push_back(split(line));
    }
  }
  return table;
}

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NumericalError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace gyronn
