#include "stochdiag/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "stochdiag/errors.hpp"
#include "stochdiag/optim.hpp"
#include "stochdiag/parallel.hpp"
#include "stochdiag/special_functions.hpp"

namespace stochdiag::gp {

namespace detail {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void GpCore::factorize() {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, i) = cov.signal_variance + noise[i];
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double q = 0.0;
            for (Eigen::Index d = 0; d < X.cols(); ++d) {
                const double diff = (X(i, d) - X(j, d)) / cov.lengthscales[d];
                q += diff * diff;
            }
            A(i, j) = A(j, i) = cov.signal_variance * std::exp(-0.5 * q);
        }
    }
    jitter = 0.0;
    for (;;) {
        chol.compute(A + jitter * Eigen::MatrixXd::Identity(n, n));
        if (chol.info() == Eigen::Success) break;
        jitter = jitter == 0.0 ? kJitterFloor : jitter * 10.0;
        if (jitter > kJitterMax) {
            throw NumericalError("GP covariance factorization failed at maximum jitter");
        }
    }
    alpha = chol.solve((targets.array() - prior_mean).matrix().eval());
}

double GpCore::log_likelihood() const {
    const Eigen::VectorXd centered = (targets.array() - prior_mean).matrix();
    double log_det = 0.0;
    const auto& L = chol.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        log_det += std::log(L(i, i));
    }
    return -0.5 * centered.dot(alpha) - log_det -
           0.5 * static_cast<double>(L.rows()) * kLog2Pi;
}

}  // namespace detail

namespace {

using detail::GpCore;

// Per-dimension squared distance matrices, built once per fit so each
// hyperparameter evaluation is just a scaled exp over the cached entries.
struct SqDistCache {
    std::vector<Eigen::MatrixXd> per_dim;

    explicit SqDistCache(const Eigen::MatrixXd& X) {
        per_dim.reserve(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index d = 0; d < X.cols(); ++d) {
            Eigen::MatrixXd D(X.rows(), X.rows());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                D(i, i) = 0.0;
                for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
                    const double diff = X(i, d) - X(j, d);
                    D(i, j) = D(j, i) = diff * diff;
                }
            }
            per_dim.push_back(std::move(D));
        }
    }

    Eigen::MatrixXd covariance(const CovarianceSpec& cov) const {
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(per_dim[0].rows(), per_dim[0].cols());
        for (std::size_t d = 0; d < per_dim.size(); ++d) {
            Q += per_dim[d] / (cov.lengthscales[static_cast<Eigen::Index>(d)] *
                               cov.lengthscales[static_cast<Eigen::Index>(d)]);
        }
        return cov.signal_variance * (-0.5 * Q.array()).exp().matrix();
    }
};

double gaussian_log_density(const Eigen::MatrixXd& A, const Eigen::VectorXd& centered) {
    Eigen::LLT<Eigen::MatrixXd> chol(A);
    if (chol.info() != Eigen::Success) {
        throw NumericalError("covariance factorization failed");
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        log_det += std::log(chol.matrixLLT()(i, i));
    }
    return -0.5 * centered.dot(chol.solve(centered)) - log_det -
           0.5 * static_cast<double>(A.rows()) * 1.8378770664093454836;
}

Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const CovarianceSpec& cov) {
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < B.rows(); ++j) {
            double q = 0.0;
            for (Eigen::Index d = 0; d < A.cols(); ++d) {
                const double diff = (A(i, d) - B(j, d)) / cov.lengthscales[d];
                q += diff * diff;
            }
            K(i, j) = cov.signal_variance * std::exp(-0.5 * q);
        }
    }
    return K;
}

struct Standardization {
    double mean = 0.0;
    double sd = 1.0;
};

Standardization output_standardization(const Eigen::VectorXd& y) {
    Standardization s;
    s.mean = y.mean();
    if (y.size() > 1) {
        s.sd = std::sqrt((y.array() - s.mean).square().sum() /
                         static_cast<double>(y.size() - 1));
    }
    if (!(s.sd > 0.0)) s.sd = 1.0;
    return s;
}

double standardized_prior_mean(const MeanSpec& mean, const Standardization& s) {
    return mean.form == MeanSpec::Form::Zero ? 0.0 : (mean.value - s.mean) / s.sd;
}

// Bounded multi-start Nelder-Mead over log hyperparameters. Bounds are
// enforced by clamping inside the objective plus a quadratic pull-back
// penalty. Start 0 is a fixed heuristic; the rest are log-uniform draws.
struct HyperSearch {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Eigen::VectorXd clamp(const Eigen::VectorXd& theta) const {
        return theta.cwiseMax(lo).cwiseMin(hi);
    }

    template <class Objective>
    optim::NelderMeadResult run(const Objective& objective,
                                const std::vector<Eigen::VectorXd>& starts,
                                int max_evals) const {
        auto penalized = [&](const Eigen::VectorXd& theta) {
            const Eigen::VectorXd inside = clamp(theta);
            const double excess = (theta - inside).squaredNorm();
            double value;
            try {
                value = objective(inside);
            } catch (const NumericalError&) {
                value = 1e10;
            }
            if (!std::isfinite(value)) value = 1e10;
            return value + 100.0 * excess;
        };
        std::vector<optim::NelderMeadResult> results(starts.size());
        parallel_for(starts.size(), Exec::Parallel, [&](std::size_t k) {
            results[k] = optim::nelder_mead(penalized, starts[k], 0.5, max_evals);
        });
        std::size_t best = 0;
        for (std::size_t k = 1; k < results.size(); ++k) {
            if (results[k].value < results[best].value) best = k;
        }
        optim::NelderMeadResult out = results[best];
        out.x = clamp(out.x);
        bool any_converged = false;
        for (const auto& r : results) any_converged |= r.converged;
        out.converged = any_converged;
        return out;
    }
};

std::vector<Eigen::VectorXd> random_starts(const Eigen::VectorXd& first,
                                           const Eigen::VectorXd& lo,
                                           const Eigen::VectorXd& hi, int n_starts,
                                           RngStream rng) {
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(first);
    for (int k = 1; k < n_starts; ++k) {
        RngStream start_rng = rng.substream(static_cast<std::uint64_t>(k));
        Eigen::VectorXd theta(first.size());
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            theta[j] = start_rng.uniform(lo[j], hi[j]);
        }
        starts.push_back(theta);
    }
    return starts;
}

struct MeanGpFit {
    CovarianceSpec cov;
    bool converged = false;
};

// Fits (lengthscales, signal variance) of a GP with a fixed per-point noise
// vector, maximizing the marginal likelihood of the standardized targets.
MeanGpFit fit_mean_hyperparameters(const SqDistCache& cache,
                                   const Eigen::VectorXd& targets_std,
                                   double prior_mean_std,
                                   const Eigen::VectorXd& noise_std,
                                   const FitConfig& config,
                                   const std::vector<Eigen::VectorXd>& starts) {
    const Eigen::Index d = static_cast<Eigen::Index>(cache.per_dim.size());
    const Eigen::VectorXd centered = (targets_std.array() - prior_mean_std).matrix();

    HyperSearch search;
    search.lo.resize(d + 1);
    search.hi.resize(d + 1);
    search.lo.head(d).setConstant(std::log(config.lengthscale_lo));
    search.hi.head(d).setConstant(std::log(config.lengthscale_hi));
    search.lo[d] = std::log(config.variance_lo);
    search.hi[d] = std::log(config.variance_hi);

    auto objective = [&](const Eigen::VectorXd& theta) {
        CovarianceSpec cov;
        cov.lengthscales = theta.head(d).array().exp().matrix();
        cov.signal_variance = std::exp(theta[d]);
        Eigen::MatrixXd A = cache.covariance(cov);
        A.diagonal() += noise_std;
        return -gaussian_log_density(A, centered);
    };

    const auto result = search.run(objective, starts, config.max_evals);
    MeanGpFit fit;
    fit.cov.lengthscales = result.x.head(d).array().exp().matrix();
    fit.cov.signal_variance = std::exp(result.x[d]);
    fit.converged = result.converged && result.value < 1e9;
    if (!(result.value < 1e9)) {
        throw FittingError("mean GP hyperparameter search found no usable optimum");
    }
    return fit;
}

Eigen::VectorXd default_mean_start(Eigen::Index d) {
    Eigen::VectorXd theta(d + 1);
    theta.head(d).setConstant(std::log(0.3));
    theta[d] = std::log(1.0);
    return theta;
}

std::vector<PointPrediction> predict_core(const GpCore& core, const Standardization& s,
                                          const Eigen::MatrixXd& Xstar) {
    if (Xstar.cols() != core.X.cols()) {
        throw std::domain_error("predict: input dimension mismatch");
    }
    const Eigen::MatrixXd Ksx = cross_covariance(core.X, Xstar, core.cov);
    const Eigen::MatrixXd solved = core.chol.solve(Ksx);
    std::vector<PointPrediction> out(static_cast<std::size_t>(Xstar.rows()));
    for (Eigen::Index i = 0; i < Xstar.rows(); ++i) {
        PointPrediction p;
        const double m_std = core.prior_mean + Ksx.col(i).dot(core.alpha);
        double v_std = core.cov.signal_variance - Ksx.col(i).dot(solved.col(i));
        if (v_std < 0.0) v_std = 0.0;
        p.mean = s.mean + s.sd * m_std;
        p.mean_variance = s.sd * s.sd * v_std;
        out[static_cast<std::size_t>(i)] = p;
    }
    return out;
}

JointPrediction joint_predict_core(const GpCore& core, const Standardization& s,
                                   const Eigen::MatrixXd& Xstar) {
    if (Xstar.cols() != core.X.cols()) {
        throw std::domain_error("joint_predict: input dimension mismatch");
    }
    const Eigen::MatrixXd Ksx = cross_covariance(core.X, Xstar, core.cov);
    const Eigen::MatrixXd Kss = cross_covariance(Xstar, Xstar, core.cov);
    const Eigen::MatrixXd solved = core.chol.solve(Ksx);
    JointPrediction joint;
    joint.mean = (core.prior_mean + (Ksx.transpose() * core.alpha).array()).matrix();
    joint.mean = (s.mean + s.sd * joint.mean.array()).matrix();
    Eigen::MatrixXd cov = Kss - Ksx.transpose() * solved;
    cov = 0.5 * (cov + cov.transpose());
    joint.covariance = s.sd * s.sd * cov;
    return joint;
}

double intrinsic_from_var_core(const GpCore& var_core, const Standardization& s,
                               const Eigen::RowVectorXd& xstar) {
    Eigen::MatrixXd one_row = xstar;
    const Eigen::MatrixXd Ksx = cross_covariance(var_core.X, one_row, var_core.cov);
    double log_var = var_core.prior_mean + Ksx.col(0).dot(var_core.alpha);
    log_var = std::clamp(log_var, -40.0, 40.0);
    return s.sd * s.sd * std::exp(log_var);
}

// Groups identical input rows; first-appearance order is preserved.
struct ReplicateGroups {
    Eigen::MatrixXd unique_X;
    std::vector<std::vector<Eigen::Index>> members;
};

ReplicateGroups group_rows(const Eigen::MatrixXd& X) {
    ReplicateGroups groups;
    std::map<std::vector<double>, std::size_t> seen;
    std::vector<std::vector<Eigen::Index>> members;
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::vector<double> key(X.cols());
        for (Eigen::Index d = 0; d < X.cols(); ++d) key[static_cast<std::size_t>(d)] = X(i, d);
        auto [it, inserted] = seen.emplace(key, members.size());
        if (inserted) {
            members.emplace_back();
            order.push_back(i);
        }
        members[it->second].push_back(i);
    }
    groups.unique_X.resize(static_cast<Eigen::Index>(members.size()), X.cols());
    for (std::size_t g = 0; g < members.size(); ++g) {
        groups.unique_X.row(static_cast<Eigen::Index>(g)) = X.row(order[g]);
    }
    groups.members = std::move(members);
    return groups;
}

// Expected downward bias of log(sample variance) for r normal replicates:
// E[log S^2] = log sigma^2 + digamma((r-1)/2) + log 2 - log(r-1).
double log_variance_bias(int r) {
    return sf::digamma(0.5 * (r - 1)) + std::log(2.0) - std::log(static_cast<double>(r - 1));
}

}  // namespace

double marginal_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const MeanSpec& mean, const CovarianceSpec& cov,
                               double nugget) {
    if (X.rows() != y.size()) {
        throw std::domain_error("marginal_log_likelihood: rows(X) must equal length(y)");
    }
    if (cov.lengthscales.size() != X.cols()) {
        throw std::domain_error("marginal_log_likelihood: lengthscale count mismatch");
    }
    Eigen::MatrixXd A = cross_covariance(X, X, cov);
    A.diagonal().array() += nugget;
    const double m0 = mean.form == MeanSpec::Form::Zero ? 0.0 : mean.value;
    return gaussian_log_density(A, (y.array() - m0).matrix());
}

FittedHomGP FittedHomGP::from_hyperparameters(const Eigen::MatrixXd& X,
                                              const Eigen::VectorXd& y,
                                              const MeanSpec& mean,
                                              const CovarianceSpec& cov,
                                              double nugget) {
    if (X.rows() != y.size() || X.rows() < 1) {
        throw std::domain_error("from_hyperparameters: rows(X) must equal length(y)");
    }
    if (!(nugget >= 0.0)) {
        throw std::domain_error("from_hyperparameters: nugget must be nonnegative");
    }
    FittedHomGP model;
    model.y_raw_ = y;
    model.y_mean_ = 0.0;
    model.y_sd_ = 1.0;
    model.mean_ = mean;
    model.core_.X = X;
    model.core_.targets = y;
    model.core_.prior_mean = mean.form == MeanSpec::Form::Zero ? 0.0 : mean.value;
    model.core_.cov = cov;
    model.core_.noise = Eigen::VectorXd::Constant(X.rows(), std::max(nugget, kJitterFloor));
    model.core_.factorize();
    return model;
}

CovarianceSpec FittedHomGP::covariance() const {
    CovarianceSpec raw = core_.cov;
    raw.signal_variance *= y_sd_ * y_sd_;
    return raw;
}

double FittedHomGP::nugget() const { return y_sd_ * y_sd_ * core_.noise[0]; }

double FittedHomGP::prior_mean() const { return y_mean_ + y_sd_ * core_.prior_mean; }

FittedHomGP fit_homgp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FitConfig& config, RngStream rng) {
    if (X.rows() != y.size() || X.rows() < 2) {
        throw std::domain_error("fit_homgp: need rows(X) = length(y) >= 2");
    }
    FittedHomGP model;
    model.y_raw_ = y;
    model.mean_ = config.mean;

    const Standardization s = output_standardization(y);
    model.y_mean_ = s.mean;
    model.y_sd_ = s.sd;
    const Eigen::VectorXd y_std = ((y.array() - s.mean) / s.sd).matrix();
    const double prior_mean_std = standardized_prior_mean(config.mean, s);
    const Eigen::Index d = X.cols();

    model.core_.X = X;
    model.core_.targets = y_std;
    model.core_.prior_mean = prior_mean_std;

    const double y_std_var = (y_std.array() - y_std.mean()).square().sum() /
                             std::max<double>(1.0, static_cast<double>(y_std.size() - 1));
    if (y_std_var <= 0.0) {
        // All outputs identical: nothing to learn, park at the floor.
        model.core_.cov.lengthscales = Eigen::VectorXd::Constant(d, 0.3);
        model.core_.cov.signal_variance = config.variance_lo;
        model.core_.noise = Eigen::VectorXd::Constant(X.rows(), kJitterFloor);
        model.core_.factorize();
        model.converged_ = true;
        return model;
    }

    const SqDistCache cache(X);
    const Eigen::VectorXd centered = (y_std.array() - prior_mean_std).matrix();
    const bool learn_nugget = !config.fixed_nugget.has_value();
    const double nugget_fixed_std =
        learn_nugget ? 0.0
                     : std::max(kJitterFloor, *config.fixed_nugget / (s.sd * s.sd));
    const Eigen::Index n_params = d + 1 + (learn_nugget ? 1 : 0);

    HyperSearch search;
    search.lo.resize(n_params);
    search.hi.resize(n_params);
    search.lo.head(d).setConstant(std::log(config.lengthscale_lo));
    search.hi.head(d).setConstant(std::log(config.lengthscale_hi));
    search.lo[d] = std::log(config.variance_lo);
    search.hi[d] = std::log(config.variance_hi);
    if (learn_nugget) {
        search.lo[d + 1] = std::log(config.variance_lo);
        search.hi[d + 1] = std::log(config.variance_hi);
    }

    auto objective = [&](const Eigen::VectorXd& theta) {
        CovarianceSpec cov;
        cov.lengthscales = theta.head(d).array().exp().matrix();
        cov.signal_variance = std::exp(theta[d]);
        const double nugget_std =
            learn_nugget ? std::exp(theta[d + 1]) : nugget_fixed_std;
        Eigen::MatrixXd A = cache.covariance(cov);
        A.diagonal().array() += nugget_std;
        return -gaussian_log_density(A, centered);
    };

    Eigen::VectorXd first(n_params);
    first.head(d).setConstant(std::log(0.3));
    first[d] = std::log(1.0);
    if (learn_nugget) first[d + 1] = std::log(0.1);
    const auto starts = random_starts(first, search.lo, search.hi, config.n_starts,
                                      rng.substream(0));
    const auto result = search.run(objective, starts, config.max_evals);
    if (!(result.value < 1e9)) {
        throw FittingError("fit_homgp: hyperparameter search found no usable optimum");
    }

    model.core_.cov.lengthscales = result.x.head(d).array().exp().matrix();
    model.core_.cov.signal_variance = std::exp(result.x[d]);
    const double nugget_std = learn_nugget ? std::exp(result.x[d + 1]) : nugget_fixed_std;
    model.core_.noise = Eigen::VectorXd::Constant(X.rows(), std::max(nugget_std, kJitterFloor));
    model.core_.factorize();
    model.converged_ = result.converged;
    return model;
}

FittedHetGP fit_hetgp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FitConfig& config, RngStream rng) {
    if (X.rows() != y.size() || X.rows() < 2) {
        throw std::domain_error("fit_hetgp: need rows(X) = length(y) >= 2");
    }
    const ReplicateGroups groups = group_rows(X);
    const auto n_unique = static_cast<Eigen::Index>(groups.members.size());
    const Eigen::Index d = X.cols();

    FittedHetGP model;
    model.mean_ = config.mean;
    const Standardization s = output_standardization(y);
    model.y_mean_ = s.mean;
    model.y_sd_ = s.sd;

    model.replicate_counts_.resize(static_cast<std::size_t>(n_unique));
    model.replicate_means_raw_.resize(n_unique);
    Eigen::VectorXd ybar_std(n_unique);
    Eigen::VectorXd pooled_var_std(n_unique);  // -1 marks unreplicated locations
    for (Eigen::Index g = 0; g < n_unique; ++g) {
        const auto& rows = groups.members[static_cast<std::size_t>(g)];
        const int r = static_cast<int>(rows.size());
        model.replicate_counts_[static_cast<std::size_t>(g)] = r;
        double sum = 0.0;
        for (const auto i : rows) sum += y[i];
        const double mean_raw = sum / r;
        model.replicate_means_raw_[g] = mean_raw;
        ybar_std[g] = (mean_raw - s.mean) / s.sd;
        if (r >= 2) {
            double ss = 0.0;
            for (const auto i : rows) ss += (y[i] - mean_raw) * (y[i] - mean_raw);
            pooled_var_std[g] = std::max(ss / (r - 1) / (s.sd * s.sd), 1e-10);
        } else {
            pooled_var_std[g] = -1.0;
        }
    }

    // Initial intrinsic-variance field: pooled replicate variances where
    // available, their average elsewhere.
    double pooled_sum = 0.0;
    int pooled_n = 0;
    for (Eigen::Index g = 0; g < n_unique; ++g) {
        if (pooled_var_std[g] > 0.0) {
            pooled_sum += pooled_var_std[g];
            ++pooled_n;
        }
    }
    const double fallback_var = pooled_n > 0 ? pooled_sum / pooled_n : 0.1;
    Eigen::VectorXd lambda(n_unique);
    for (Eigen::Index g = 0; g < n_unique; ++g) {
        lambda[g] = pooled_var_std[g] > 0.0 ? pooled_var_std[g] : fallback_var;
    }

    const SqDistCache cache(groups.unique_X);
    const double prior_mean_std = standardized_prior_mean(config.mean, s);

    GpCore mean_core;
    mean_core.X = groups.unique_X;
    mean_core.targets = ybar_std;
    mean_core.prior_mean = prior_mean_std;

    GpCore var_core;
    var_core.X = groups.unique_X;

    Eigen::VectorXd previous_mean;
    Eigen::VectorXd warm_mean_theta, warm_var_theta;
    bool converged = false;
    int iteration = 0;

    while (iteration < config.het_max_iterations) {
        ++iteration;

        // (1) Mean-process hyperparameters under the current variance field.
        Eigen::VectorXd mean_noise(n_unique);
        for (Eigen::Index g = 0; g < n_unique; ++g) {
            mean_noise[g] =
                lambda[g] / model.replicate_counts_[static_cast<std::size_t>(g)];
        }
        std::vector<Eigen::VectorXd> mean_starts;
        HyperSearch mean_box;
        mean_box.lo.resize(d + 1);
        mean_box.hi.resize(d + 1);
        mean_box.lo.head(d).setConstant(std::log(config.lengthscale_lo));
        mean_box.hi.head(d).setConstant(std::log(config.lengthscale_hi));
        mean_box.lo[d] = std::log(config.variance_lo);
        mean_box.hi[d] = std::log(config.variance_hi);
        if (iteration == 1) {
            mean_starts = random_starts(default_mean_start(d), mean_box.lo, mean_box.hi,
                                        config.n_starts, rng.substream(1));
        } else {
            mean_starts = {warm_mean_theta};
        }
        const auto mean_fit = fit_mean_hyperparameters(
            cache, ybar_std, prior_mean_std, mean_noise, config, mean_starts);
        mean_core.cov = mean_fit.cov;
        mean_core.noise = mean_noise;
        mean_core.factorize();
        warm_mean_theta.resize(d + 1);
        warm_mean_theta.head(d) = mean_fit.cov.lengthscales.array().log().matrix();
        warm_mean_theta[d] = std::log(mean_fit.cov.signal_variance);

        // (2) Log-variance targets from replicate pools / squared residuals.
        const Eigen::MatrixXd Kuu = cross_covariance(groups.unique_X, groups.unique_X,
                                                     mean_core.cov);
        const Eigen::VectorXd mean_at_train =
            (mean_core.prior_mean + (Kuu * mean_core.alpha).array()).matrix();
        Eigen::VectorXd log_var_targets(n_unique);
        for (Eigen::Index g = 0; g < n_unique; ++g) {
            const int r = model.replicate_counts_[static_cast<std::size_t>(g)];
            if (r >= 2) {
                log_var_targets[g] = std::log(pooled_var_std[g]) - log_variance_bias(r);
            } else {
                const double resid = ybar_std[g] - mean_at_train[g];
                const double est = std::max(resid * resid, 1e-10);
                // One-observation chi-square bias: E[log chi2_1] = psi(1/2)+log 2.
                log_var_targets[g] =
                    std::log(est) - (sf::digamma(0.5) + std::log(2.0));
            }
        }

        // (3) Variance process fit to the log-variance targets. The targets
        // carry a known sampling noise, Var[log S^2] = trigamma((r-1)/2),
        // which enters the variance GP as fixed per-point noise so it smooths
        // instead of chasing replicate scatter.
        Eigen::VectorXd target_noise(n_unique);
        for (Eigen::Index g = 0; g < n_unique; ++g) {
            const int r = model.replicate_counts_[static_cast<std::size_t>(g)];
            target_noise[g] = r >= 2 ? sf::trigamma(0.5 * (r - 1)) : sf::trigamma(0.5);
        }
        var_core.targets = log_var_targets;
        var_core.prior_mean = log_var_targets.mean();
        const Eigen::VectorXd var_centered =
            (log_var_targets.array() - var_core.prior_mean).matrix();
        HyperSearch var_box;
        var_box.lo.resize(d + 2);
        var_box.hi.resize(d + 2);
        var_box.lo.head(d).setConstant(std::log(config.lengthscale_lo));
        var_box.hi.head(d).setConstant(std::log(config.lengthscale_hi));
        var_box.lo[d] = std::log(config.variance_lo);
        var_box.hi[d] = std::log(config.variance_hi);
        var_box.lo[d + 1] = std::log(1e-4);
        var_box.hi[d + 1] = std::log(config.variance_hi);
        auto var_objective = [&](const Eigen::VectorXd& theta) {
            CovarianceSpec cov;
            cov.lengthscales = theta.head(d).array().exp().matrix();
            cov.signal_variance = std::exp(theta[d]);
            Eigen::MatrixXd A = cache.covariance(cov);
            A.diagonal() += (target_noise.array() + std::exp(theta[d + 1])).matrix();
            return -gaussian_log_density(A, var_centered);
        };
        std::vector<Eigen::VectorXd> var_starts;
        if (iteration == 1) {
            Eigen::VectorXd var_first(d + 2);
            var_first.head(d).setConstant(std::log(0.5));
            var_first[d] = std::log(1.0);
            var_first[d + 1] = std::log(0.5);
            var_starts = random_starts(var_first, var_box.lo, var_box.hi,
                                       config.n_starts, rng.substream(2));
        } else {
            var_starts = {warm_var_theta};
        }
        const auto var_result = var_box.run(var_objective, var_starts, config.max_evals);
        if (!(var_result.value < 1e9)) {
            throw FittingError("fit_hetgp: variance GP search found no usable optimum");
        }
        warm_var_theta = var_result.x;
        var_core.cov.lengthscales = var_result.x.head(d).array().exp().matrix();
        var_core.cov.signal_variance = std::exp(var_result.x[d]);
        var_core.noise =
            (target_noise.array() + std::exp(var_result.x[d + 1])).matrix();
        var_core.factorize();

        // (4) Updated variance field.
        const Eigen::MatrixXd Kvv = cross_covariance(groups.unique_X, groups.unique_X,
                                                     var_core.cov);
        for (Eigen::Index g = 0; g < n_unique; ++g) {
            const double log_var =
                std::clamp(var_core.prior_mean + Kvv.row(g).dot(var_core.alpha),
                           -40.0, 40.0);
            lambda[g] = std::exp(log_var);
        }

        // (5) Stop once the training-point mean predictions settle.
        if (previous_mean.size() > 0) {
            const double scale = previous_mean.cwiseAbs().maxCoeff() + 1e-12;
            const double change =
                (mean_at_train - previous_mean).cwiseAbs().maxCoeff() / scale;
            if (change < config.het_tolerance) {
                converged = true;
                previous_mean = mean_at_train;
                break;
            }
        }
        previous_mean = mean_at_train;
    }

    // Final mean-core factorization under the converged variance field.
    Eigen::VectorXd final_noise(n_unique);
    for (Eigen::Index g = 0; g < n_unique; ++g) {
        final_noise[g] = lambda[g] / model.replicate_counts_[static_cast<std::size_t>(g)];
    }
    mean_core.noise = final_noise;
    mean_core.factorize();

    model.mean_core_ = std::move(mean_core);
    model.var_core_ = std::move(var_core);
    model.iterations_ = iteration;
    model.converged_ = converged;
    return model;
}

CovarianceSpec FittedHetGP::mean_covariance() const {
    CovarianceSpec raw = mean_core_.cov;
    raw.signal_variance *= y_sd_ * y_sd_;
    return raw;
}

double FittedHetGP::prior_mean() const { return y_mean_ + y_sd_ * mean_core_.prior_mean; }

Eigen::VectorXd FittedHetGP::intrinsic_variance_estimates() const {
    Eigen::VectorXd out(mean_core_.X.rows());
    const Standardization s{y_mean_, y_sd_};
    for (Eigen::Index g = 0; g < out.size(); ++g) {
        out[g] = intrinsic_from_var_core(var_core_, s, mean_core_.X.row(g));
    }
    return out;
}

std::vector<PointPrediction> predict(const FittedHomGP& model,
                                     const Eigen::MatrixXd& Xstar) {
    auto preds = predict_core(model.core(), {model.y_standardize_mean(),
                                             model.y_standardize_sd()}, Xstar);
    const double intrinsic = model.nugget();
    for (auto& p : preds) p.intrinsic_variance = std::max(intrinsic, 1e-300);
    return preds;
}

std::vector<PointPrediction> predict(const FittedHetGP& model,
                                     const Eigen::MatrixXd& Xstar) {
    const Standardization s{model.y_standardize_mean(), model.y_standardize_sd()};
    auto preds = predict_core(model.mean_core(), s, Xstar);
    for (Eigen::Index i = 0; i < Xstar.rows(); ++i) {
        preds[static_cast<std::size_t>(i)].intrinsic_variance =
            intrinsic_from_var_core(model.variance_core(), s, Xstar.row(i));
    }
    return preds;
}

std::vector<PointPrediction> predict(const Model& model, const Eigen::MatrixXd& Xstar) {
    return std::visit([&](const auto& m) { return predict(m, Xstar); }, model);
}

JointPrediction joint_predict(const FittedHomGP& model, const Eigen::MatrixXd& Xstar) {
    return joint_predict_core(model.core(), {model.y_standardize_mean(),
                                             model.y_standardize_sd()}, Xstar);
}

JointPrediction joint_predict(const FittedHetGP& model, const Eigen::MatrixXd& Xstar) {
    return joint_predict_core(model.mean_core(), {model.y_standardize_mean(),
                                                  model.y_standardize_sd()}, Xstar);
}

JointPrediction joint_predict(const Model& model, const Eigen::MatrixXd& Xstar) {
    return std::visit([&](const auto& m) { return joint_predict(m, Xstar); }, model);
}

Eigen::MatrixXd sample_mean_function(const Model& model, const Eigen::MatrixXd& Xstar,
                                     int n_draws, RngStream rng) {
    if (n_draws < 1) {
        throw std::domain_error("sample_mean_function: need n_draws >= 1");
    }
    const JointPrediction joint = joint_predict(model, Xstar);
    const Eigen::Index n = joint.mean.size();
    Eigen::LLT<Eigen::MatrixXd> chol;
    double jitter = 0.0;
    for (;;) {
        chol.compute(joint.covariance + jitter * Eigen::MatrixXd::Identity(n, n));
        if (chol.info() == Eigen::Success) break;
        jitter = jitter == 0.0 ? kJitterFloor : jitter * 10.0;
        if (jitter > kJitterMax) {
            throw NumericalError(
                "sample_mean_function: covariance not PSD at maximum jitter");
        }
    }
    const Eigen::MatrixXd L = chol.matrixL();
    Eigen::MatrixXd draws(n_draws, n);
    Eigen::VectorXd z(n);
    for (int k = 0; k < n_draws; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
        draws.row(k) = (joint.mean + L * z).transpose();
    }
    return draws;
}

}  // namespace stochdiag::gp
