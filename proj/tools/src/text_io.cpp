#include "text_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "d3d/errors.hpp"

namespace d3d::cli {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_row(std::ostream& os, const std::string& label, std::span<const float> values) {
  os << label;
  for (float v : values) os << ' ' << fmt(v);
  os << '\n';
}

void write_rows(std::ostream& os, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) write_row(os, std::to_string(r), m.row(r));
}

Matrix read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  Matrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string label;
    if (!(ls >> label) || label.front() == '#') continue;
    if (label.find_first_not_of("0123456789") != std::string::npos) continue;
    std::vector<float> row;
    std::string tok;
    while (ls >> tok) {
      try {
        row.push_back(std::stof(tok));
      } catch (const std::exception&) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (m.rows() > 0 && row.size() != m.cols()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(m.cols()) +
                       " values, got " + std::to_string(row.size()));
    }
    m.append_row(row);
  }
  if (m.rows() == 0) throw InsufficientInputError("'" + path.string() + "' holds no rows");
  return m;
}

}  // namespace d3d::cli
