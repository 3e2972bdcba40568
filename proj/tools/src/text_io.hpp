#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "d3d/tensor.hpp"

namespace d3d::cli {

// %.6g, the single numeric format of every command.
std::string fmt(double v);

// `label v0 v1 ...`
void write_row(std::ostream& os, const std::string& label, std::span<const float> values);
// One `t v0 v1 ...` line per matrix row.
void write_rows(std::ostream& os, const Matrix& m);

// Parses `t v0 v1 ...` lines; non-numeric labels (e.g. `avg`) are skipped.
Matrix read_rows(const std::filesystem::path& path);

}  // namespace d3d::cli
