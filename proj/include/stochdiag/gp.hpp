#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stochdiag/rng.hpp"

namespace stochdiag::gp {

// Squared-exponential covariance, one lengthscale per input dimension:
// k(x,x') = signal_variance * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2).
struct CovarianceSpec {
    Eigen::VectorXd lengthscales;
    double signal_variance = 1.0;
};

struct MeanSpec {
    enum class Form { Zero, Constant };
    Form form = Form::Zero;
    double value = 0.0;  // constant case only
};

// Per-location predictive triple. mean_variance is the variance of the
// latent mean and excludes the intrinsic noise; the total predictive
// variance of a single future run is mean_variance + intrinsic_variance.
struct PointPrediction {
    double mean = 0.0;
    double mean_variance = 0.0;
    double intrinsic_variance = 0.0;
};

struct JointPrediction {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // covariance of the latent mean, no intrinsic term
};

struct FitConfig {
    int n_starts = 10;
    int max_evals = 400;  // Nelder-Mead budget per start
    double lengthscale_lo = 1e-3;
    double lengthscale_hi = 10.0;
    // Variance bounds apply on the standardized-output scale.
    double variance_lo = 1e-8;
    double variance_hi = 1e3;
    // Pins the intrinsic variance (raw output scale) instead of learning it.
    std::optional<double> fixed_nugget;
    MeanSpec mean{};
    int het_max_iterations = 20;
    double het_tolerance = 1e-4;
};

// Jitter floor and escalation ceiling, on the standardized-output scale.
inline constexpr double kJitterFloor = 1e-8;
inline constexpr double kJitterMax = 1e-4;

namespace detail {

// Shared GP state on the standardized-output scale: targets, constant prior
// mean, covariance, per-point noise variances, and the cached factorization
// of K + diag(noise) (+ escalating jitter when needed).
struct GpCore {
    Eigen::MatrixXd X;
    Eigen::VectorXd targets;
    double prior_mean = 0.0;
    CovarianceSpec cov;
    Eigen::VectorXd noise;
    double jitter = 0.0;

    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd alpha;

    void factorize();
    double log_likelihood() const;
};

}  // namespace detail

// Homoscedastic GP with a constant intrinsic-variance (nugget) term.
class FittedHomGP {
public:
    // Builds the model from known hyperparameters on the raw output scale
    // (identity standardization); no fitting happens.
    static FittedHomGP from_hyperparameters(const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y,
                                            const MeanSpec& mean,
                                            const CovarianceSpec& cov,
                                            double nugget);

    const Eigen::MatrixXd& training_inputs() const { return core_.X; }
    const Eigen::VectorXd& training_outputs() const { return y_raw_; }
    const MeanSpec& mean_spec() const { return mean_; }

    // Raw-output-scale views of the hyperparameters.
    CovarianceSpec covariance() const;
    double nugget() const;
    double prior_mean() const;

    double y_standardize_mean() const { return y_mean_; }
    double y_standardize_sd() const { return y_sd_; }
    bool fit_converged() const { return converged_; }

    const detail::GpCore& core() const { return core_; }

private:
    friend FittedHomGP fit_homgp(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                 const FitConfig&, RngStream);
    friend class FittedHetGP;
    friend struct ModelIO;

    detail::GpCore core_;
    Eigen::VectorXd y_raw_;
    double y_mean_ = 0.0;
    double y_sd_ = 1.0;
    MeanSpec mean_{};
    bool converged_ = true;
};

// Heteroscedastic GP: a mean process over the unique input locations coupled
// with a second GP over log intrinsic variances.
class FittedHetGP {
public:
    const Eigen::MatrixXd& unique_inputs() const { return mean_core_.X; }
    const std::vector<int>& replicate_counts() const { return replicate_counts_; }
    const Eigen::VectorXd& replicate_means() const { return replicate_means_raw_; }

    CovarianceSpec mean_covariance() const;  // raw output scale
    double prior_mean() const;

    // Per-unique-location intrinsic variance estimates, raw output scale.
    Eigen::VectorXd intrinsic_variance_estimates() const;

    double y_standardize_mean() const { return y_mean_; }
    double y_standardize_sd() const { return y_sd_; }
    int iterations() const { return iterations_; }
    bool fit_converged() const { return converged_; }

    const detail::GpCore& mean_core() const { return mean_core_; }
    const detail::GpCore& variance_core() const { return var_core_; }

private:
    friend FittedHetGP fit_hetgp(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                 const FitConfig&, RngStream);
    friend struct ModelIO;

    detail::GpCore mean_core_;  // targets: standardized replicate means
    detail::GpCore var_core_;   // targets: log intrinsic variances (standardized scale)
    std::vector<int> replicate_counts_;
    Eigen::VectorXd replicate_means_raw_;
    double y_mean_ = 0.0;
    double y_sd_ = 1.0;
    MeanSpec mean_{};
    int iterations_ = 0;
    bool converged_ = true;
};

using Model = std::variant<FittedHomGP, FittedHetGP>;

// Exact Gaussian log density of y under the GP prior with covariance
// K(X,X) + nugget*I, raw scale throughout.
double marginal_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const MeanSpec& mean, const CovarianceSpec& cov,
                               double nugget);

// Maximum-likelihood fit with multi-start Nelder-Mead over log
// hyperparameters. Outputs are standardized internally; reported predictions
// and accessors are on the raw scale. Deterministic in (data, config, rng).
FittedHomGP fit_homgp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FitConfig& config, RngStream rng);

// Iterative heteroscedastic fit: alternate between fitting the mean GP under
// the current intrinsic-variance field and refitting the log-variance GP to
// replicate-pool / residual variance targets, until the mean prediction
// stabilizes. Replication in X is strongly recommended.
FittedHetGP fit_hetgp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FitConfig& config, RngStream rng);

std::vector<PointPrediction> predict(const FittedHomGP& model,
                                     const Eigen::MatrixXd& Xstar);
std::vector<PointPrediction> predict(const FittedHetGP& model,
                                     const Eigen::MatrixXd& Xstar);
std::vector<PointPrediction> predict(const Model& model, const Eigen::MatrixXd& Xstar);

JointPrediction joint_predict(const FittedHomGP& model, const Eigen::MatrixXd& Xstar);
JointPrediction joint_predict(const FittedHetGP& model, const Eigen::MatrixXd& Xstar);
JointPrediction joint_predict(const Model& model, const Eigen::MatrixXd& Xstar);

// n_draws samples of the latent mean over Xstar, one draw per row.
Eigen::MatrixXd sample_mean_function(const Model& model, const Eigen::MatrixXd& Xstar,
                                     int n_draws, RngStream rng);

// Versioned flat-file model state (JSON); factorizations are rebuilt on load.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace stochdiag::gp
