#include "stochdiag/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "stochdiag/csv.hpp"
#include "stochdiag/errors.hpp"

namespace stochdiag::data {

std::pair<Eigen::MatrixXd, Eigen::VectorXd> ReplicatedDataset::expanded() const {
    long long total = 0;
    for (const auto& pool : replicates) total += static_cast<long long>(pool.size());
    Eigen::MatrixXd X(total, locations.cols());
    Eigen::VectorXd y(total);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < replicates.size(); ++i) {
        for (double value : replicates[i]) {
            X.row(row) = locations.row(static_cast<Eigen::Index>(i));
            y[row] = value;
            ++row;
        }
    }
    return {std::move(X), std::move(y)};
}

ReplicatedDataset group_runs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double grouping_tolerance, dist::SdConvention convention) {
    if (X.rows() != y.size()) {
        throw DataError("group_runs: rows(X) must equal length(y)");
    }
    if (X.rows() == 0) {
        throw DataError("group_runs: no runs provided");
    }
    ReplicatedDataset out;
    std::vector<Eigen::Index> representative;
    std::vector<std::vector<double>> pools;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::size_t group = representative.size();
        for (std::size_t g = 0; g < representative.size(); ++g) {
            const double gap =
                (X.row(i) - X.row(representative[g])).cwiseAbs().maxCoeff();
            const bool match = grouping_tolerance == 0.0
                                   ? gap == 0.0
                                   : gap <= grouping_tolerance;
            if (match) {
                group = g;
                break;
            }
        }
        if (group == representative.size()) {
            representative.push_back(i);
            pools.emplace_back();
        }
        pools[group].push_back(y[i]);
    }
    out.locations.resize(static_cast<Eigen::Index>(representative.size()), X.cols());
    for (std::size_t g = 0; g < representative.size(); ++g) {
        out.locations.row(static_cast<Eigen::Index>(g)) = X.row(representative[g]);
    }
    out.replicates = std::move(pools);
    out.moments.reserve(out.replicates.size());
    for (const auto& pool : out.replicates) {
        if (pool.size() >= 2) {
            out.moments.push_back(dist::sample_moments(pool, convention));
        } else {
            out.moments.push_back(std::nullopt);
        }
    }
    return out;
}

ReplicatedDataset ingest_runs(const std::string& path, double grouping_tolerance,
                              dist::SdConvention convention) {
    const csv::Table table = csv::read_numeric_csv(path);
    if (table.header.size() < 2) {
        throw DataError(path + ": run files need at least columns x1 and y");
    }
    std::size_t n_inputs = 0;
    while (n_inputs < table.header.size() &&
           table.header[n_inputs] == "x" + std::to_string(n_inputs + 1)) {
        ++n_inputs;
    }
    if (n_inputs == 0 || n_inputs >= table.header.size() ||
        table.header[n_inputs] != "y") {
        throw DataError(path + ": expected header x1,...,xd,y");
    }
    if (table.header.size() > n_inputs + 2 ||
        (table.header.size() == n_inputs + 2 &&
         table.header[n_inputs + 1] != "run_id")) {
        throw DataError(path + ": unexpected columns after y (only run_id is allowed)");
    }
    if (table.values.rows() == 0) {
        throw DataError(path + ": no data rows");
    }
    const Eigen::MatrixXd X =
        table.values.leftCols(static_cast<Eigen::Index>(n_inputs));
    const Eigen::VectorXd y = table.values.col(static_cast<Eigen::Index>(n_inputs));
    return group_runs(X, y, grouping_tolerance, convention);
}

void export_runs(const std::string& path, const ReplicatedDataset& dataset) {
    const auto [X, y] = dataset.expanded();
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
    }
    header.push_back("y");
    Eigen::MatrixXd table(X.rows(), X.cols() + 1);
    table.leftCols(X.cols()) = X;
    table.col(X.cols()) = y;
    csv::write_csv(path, header, table);
}

}  // namespace stochdiag::data
