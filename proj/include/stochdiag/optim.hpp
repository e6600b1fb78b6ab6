#pragma once

#include <Eigen/Dense>
#include <functional>

namespace stochdiag::optim {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Derivative-free simplex minimizer (Nelder & Mead 1965, standard
// coefficients). Stops when the simplex value spread falls below ftol or the
// evaluation budget runs out. Fully deterministic.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, double initial_step,
                             int max_evals = 400, double ftol = 1e-9);

}  // namespace stochdiag::optim
