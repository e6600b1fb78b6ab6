#include "stochdiag/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace stochdiag::optim {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, double initial_step,
                             int max_evals, double ftol) {
    const int n = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<Eigen::VectorXd> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    NelderMeadResult result;
    for (int i = 1; i <= n; ++i) {
        simplex[i][i - 1] += initial_step;
    }
    for (int i = 0; i <= n; ++i) {
        values[i] = fn(simplex[i]);
        ++result.evaluations;
    }

    std::vector<int> order(n + 1);
    while (result.evaluations < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return values[a] < values[b]; });
        const int best = order[0];
        const int worst = order[n];
        const int second_worst = order[n - 1];

        const double spread = std::fabs(values[worst] - values[best]);
        if (spread <= ftol * (std::fabs(values[best]) + ftol)) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += simplex[i];
        }
        centroid /= n;

        const Eigen::VectorXd reflected = centroid + alpha * (centroid - simplex[worst]);
        const double f_reflected = fn(reflected);
        ++result.evaluations;

        if (f_reflected < values[best]) {
            const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
            const double f_expanded = fn(expanded);
            ++result.evaluations;
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if (f_reflected < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            const Eigen::VectorXd contracted = centroid + rho * (simplex[worst] - centroid);
            const double f_contracted = fn(contracted);
            ++result.evaluations;
            if (f_contracted < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    simplex[i] = simplex[best] + sigma * (simplex[i] - simplex[best]);
                    values[i] = fn(simplex[i]);
                    ++result.evaluations;
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i) {
        if (values[i] < values[best]) best = i;
    }
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace stochdiag::optim
