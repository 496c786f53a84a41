#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "covest/matrix_kernels.hpp"

namespace covest::io {

struct ParseError : std::runtime_error {
    int line;
    ParseError(const std::string& msg, int line_no)
        : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

/// 17 significant digits; round-trips IEEE doubles exactly.
std::string fmt(double x);

void write_matrix_csv(const std::string& path, const Matrix& m);

/// Rectangular CSV of doubles; reports the offending line on error.
Matrix read_matrix_csv(const std::string& path);

/// Single-column file of design points.
std::vector<double> read_points_csv(const std::string& path);

void write_text(const std::string& path, const std::string& content);

}  // namespace covest::io
