#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "stochdiag/parallel.hpp"
#include "stochdiag/rng.hpp"

namespace stochdiag::design {

// A space-filling design on the unit hypercube: n unique locations with a
// replicate count per location. Each column of `points` is a valid Latin
// hypercube stratification (one value per stratum [(k-1)/n, k/n)).
struct Design {
    Eigen::MatrixXd points;       // n x d, values in [0,1)
    std::vector<int> replicates;  // all >= 1, same length as rows
};

// Best-of-n_restarts maximin Latin hypercube: among n_restarts independent
// LHS draws, returns the one with the largest minimum pairwise Euclidean
// distance (lowest restart index wins ties). Deterministic in
// (n, d, rng identity, n_restarts) and independent of the thread count.
Design maximin_lhs(std::size_t n, std::size_t d, RngStream rng,
                   std::size_t n_restarts = 1000, int replicates = 1,
                   Exec exec = Exec::Parallel);

// Row i of the design repeated replicates[i] times, contiguously, in order.
Eigen::MatrixXd expand_replicates(const Design& design);

// Columnwise affine map from the unit cube to [lower, upper].
Eigen::MatrixXd scale_to_bounds(const Eigen::MatrixXd& points,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper);

// Inverse of scale_to_bounds.
Eigen::MatrixXd scale_to_unit(const Eigen::MatrixXd& points,
                              const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper);

// Smallest pairwise Euclidean distance between rows (infinity for n < 2).
double min_pairwise_distance(const Eigen::MatrixXd& points);

}  // namespace stochdiag::design
