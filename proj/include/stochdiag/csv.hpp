#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stochdiag::csv {

struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  // rows x header.size()
};

// Strict numeric CSV: comma separated, one header row, every cell a finite
// real. Throws DataError naming the offending row/column otherwise.
Table read_numeric_csv(const std::string& path);

// Writes with %.17g so values round-trip bit-exactly through read/write.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

std::string format_double(double v);

}  // namespace stochdiag::csv
