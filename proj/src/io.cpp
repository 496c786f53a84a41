#include "covest/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace covest::io {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << fmt(m(i, j));
        }
        out << '\n';
    }
    write_text(path, out.str());
}

namespace {

std::vector<double> parse_row(const std::string& line, int line_no) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t next = line.find(',', pos);
        if (next == std::string::npos) next = line.size();
        const std::string tok = line.substr(pos, next - pos);
        try {
            std::size_t used = 0;
            row.push_back(std::stod(tok, &used));
            // trailing garbage after the number
            for (std::size_t k = used; k < tok.size(); ++k)
                if (!std::isspace(static_cast<unsigned char>(tok[k])))
                    throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("invalid numeric field '" + tok + "'", line_no);
        }
        pos = next + 1;
        if (next == line.size()) break;
    }
    return row;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row = parse_row(line, line_no);
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("expected " + std::to_string(rows.front().size()) +
                                 " columns, found " + std::to_string(row.size()),
                             line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty file: " + path, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

std::vector<double> read_points_csv(const std::string& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.cols() != 1) throw ParseError("points file must have a single column", 1);
    std::vector<double> pts(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) pts[static_cast<std::size_t>(i)] = m(i, 0);
    return pts;
}

}  // namespace covest::io
