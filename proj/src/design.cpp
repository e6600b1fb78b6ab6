#include "stochdiag/design.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace stochdiag::design {

namespace {

// One Latin hypercube draw: per column, a random permutation of the n strata
// with uniform jitter inside each stratum.
Eigen::MatrixXd lhs_draw(std::size_t n, std::size_t d, RngStream& rng) {
    Eigen::MatrixXd points(n, d);
    std::vector<int> perm(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t k = rng.next_u64() % (i + 1);
            std::swap(perm[i], perm[k]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (perm[i] + rng.uniform01()) / static_cast<double>(n);
        }
    }
    return points;
}

}  // namespace

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = (points.row(i) - points.row(j)).norm();
            if (dist < best) best = dist;
        }
    }
    return best;
}

Design maximin_lhs(std::size_t n, std::size_t d, RngStream rng,
                   std::size_t n_restarts, int replicates, Exec exec) {
    if (n < 1 || d < 1 || n_restarts < 1) {
        throw std::domain_error("maximin_lhs: need n, d, n_restarts >= 1");
    }
    if (replicates < 1) {
        throw std::domain_error("maximin_lhs: need replicates >= 1");
    }
    // Score all candidates first (cheap, parallel), then regenerate the
    // winner from its substream. Argmax over a plain array with
    // lowest-index tie-break keeps the result thread-count independent.
    std::vector<double> scores(n_restarts);
    parallel_for(n_restarts, exec, [&](std::size_t k) {
        RngStream candidate_rng = rng.substream(k);
        scores[k] = min_pairwise_distance(lhs_draw(n, d, candidate_rng));
    });
    std::size_t best = 0;
    for (std::size_t k = 1; k < n_restarts; ++k) {
        if (scores[k] > scores[best]) best = k;
    }
    RngStream winner_rng = rng.substream(best);
    Design design;
    design.points = lhs_draw(n, d, winner_rng);
    design.replicates.assign(n, replicates);
    return design;
}

Eigen::MatrixXd expand_replicates(const Design& design) {
    if (design.replicates.size() != static_cast<std::size_t>(design.points.rows())) {
        throw std::domain_error("expand_replicates: replicate count per row required");
    }
    long long total = 0;
    for (int r : design.replicates) {
        if (r < 1) throw std::domain_error("expand_replicates: replicates must be >= 1");
        total += r;
    }
    Eigen::MatrixXd expanded(total, design.points.cols());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < design.points.rows(); ++i) {
        for (int k = 0; k < design.replicates[static_cast<std::size_t>(i)]; ++k) {
            expanded.row(row++) = design.points.row(i);
        }
    }
    return expanded;
}

Eigen::MatrixXd scale_to_bounds(const Eigen::MatrixXd& points,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper) {
    if (lower.size() != points.cols() || upper.size() != points.cols()) {
        throw std::domain_error("scale_to_bounds: bounds must match the input dimension");
    }
    for (Eigen::Index j = 0; j < lower.size(); ++j) {
        if (!(lower[j] < upper[j])) {
            throw std::domain_error("scale_to_bounds: need lower < upper in every coordinate");
        }
    }
    Eigen::MatrixXd out = points;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        out.col(j) = (points.col(j).array() * (upper[j] - lower[j]) + lower[j]).matrix();
    }
    return out;
}

Eigen::MatrixXd scale_to_unit(const Eigen::MatrixXd& points,
                              const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper) {
    if (lower.size() != points.cols() || upper.size() != points.cols()) {
        throw std::domain_error("scale_to_unit: bounds must match the input dimension");
    }
    Eigen::MatrixXd out = points;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        if (!(lower[j] < upper[j])) {
            throw std::domain_error("scale_to_unit: need lower < upper in every coordinate");
        }
        out.col(j) = ((points.col(j).array() - lower[j]) / (upper[j] - lower[j])).matrix();
    }
    return out;
}

}  // namespace stochdiag::design
