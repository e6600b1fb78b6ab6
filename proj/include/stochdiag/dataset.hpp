#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "stochdiag/distributions.hpp"

namespace stochdiag::data {

// Simulator runs grouped by unique input location, with per-location sample
// statistics. Used both as training input and as the replicated validation
// set for the diagnostics.
struct ReplicatedDataset {
    Eigen::MatrixXd locations;                   // n x d unique locations
    std::vector<std::vector<double>> replicates; // outputs per location
    // Moments need at least 2 replicates; locations with r = 1 carry nullopt.
    std::vector<std::optional<dist::SampleMoments>> moments;

    std::size_t n_locations() const { return replicates.size(); }
    int replicate_count(std::size_t i) const {
        return static_cast<int>(replicates[i].size());
    }

    // Expanded (X, y) view: each location's row repeated once per replicate.
    std::pair<Eigen::MatrixXd, Eigen::VectorXd> expanded() const;
};

// Groups runs whose inputs match within `grouping_tolerance` (max-norm;
// 0 means exact bitwise equality) into replicate pools, preserving
// first-appearance order, and computes per-location moments.
ReplicatedDataset group_runs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double grouping_tolerance = 0.0,
                             dist::SdConvention convention = dist::SdConvention::NMinusOne);

// Reads a run CSV (header x1..xd,y, optional trailing run_id column) and
// groups it. Throws DataError with row/column context on malformed input.
ReplicatedDataset ingest_runs(const std::string& path, double grouping_tolerance = 0.0,
                              dist::SdConvention convention = dist::SdConvention::NMinusOne);

// Writes the expanded runs back out as x1..xd,y (lossless round trip).
void export_runs(const std::string& path, const ReplicatedDataset& dataset);

}  // namespace stochdiag::data
