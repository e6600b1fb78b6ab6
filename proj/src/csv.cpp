#include "stochdiag/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stochdiag/errors.hpp"

namespace stochdiag::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string strip(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Table read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open CSV file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV file: " + path);
    }
    Table table;
    for (const auto& cell : split_line(line)) {
        table.header.push_back(strip(cell));
    }
    const std::size_t n_cols = table.header.size();

    std::vector<double> data;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != n_cols) {
            throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(n_cols));
        }
        for (std::size_t c = 0; c < n_cols; ++c) {
            const std::string cell = strip(cells[c]);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
                throw DataError(path + ": malformed cell at row " +
                                std::to_string(line_no) + ", column " +
                                std::to_string(c + 1) + " ('" + cell + "')");
            }
            data.push_back(v);
        }
        ++n_rows;
    }
    table.values.resize(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                data[r * n_cols + c];
        }
    }
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
        throw DataError("write_csv: header width does not match the value matrix");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open CSV file for writing: " + path);
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << (c ? "," : "") << header[c];
    }
    out << "\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << (c ? "," : "") << format_double(values(r, c));
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed while writing CSV file: " + path);
    }
}

}  // namespace stochdiag::csv
