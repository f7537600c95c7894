// SPDX-License-Identifier: Apache-2.0
#include "covcsi/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace covcsi::io {

void save_complex_matrix(const std::string& path, const MatrixXcd& m, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << header << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", m(i, j).real(), m(i, j).imag());
            out << buf << (j + 1 < m.cols() ? " " : "");
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

MatrixXcd load_complex_matrix(const std::string& path, std::string* header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty matrix file: " + path);
    if (header) *header = line;

    std::vector<std::vector<cplx>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<cplx> row;
        std::string cell;
        while (ls >> cell) {
            const auto comma = cell.find(',');
            if (comma == std::string::npos) throw std::runtime_error("bad cell in " + path + ": " + cell);
            row.emplace_back(std::stod(cell.substr(0, comma)), std::stod(cell.substr(comma + 1)));
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("matrix file has no data rows: " + path);
    const size_t cols = rows.front().size();
    MatrixXcd m(rows.size(), cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw std::runtime_error("ragged matrix rows in " + path);
        for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

} // namespace covcsi::io
