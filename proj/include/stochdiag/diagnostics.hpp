#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochdiag/dataset.hpp"
#include "stochdiag/distributions.hpp"
#include "stochdiag/gp.hpp"
#include "stochdiag/parallel.hpp"
#include "stochdiag/rng.hpp"

namespace stochdiag::diag {

// Flag thresholds on |U|.
inline constexpr double kFlagLevel = 0.95;
inline constexpr double kStrongFlagLevel = 0.995;

// Tolerance-to-error distributions standing in for absent epistemic
// uncertainty. `std::nullopt` disables the corresponding correction.
struct ToleranceSpec {
    enum class Shape { Uniform, Triangular };

    // Multiplies the predicted standard deviation, e.g. (0.8, 1.2) accepts
    // any true sd within 20% of the estimate.
    std::optional<std::pair<double, double>> sd_multipliers{{0.8, 1.2}};
    // Symmetric half-widths for the acceptable true skewness / excess
    // kurtosis of the intrinsic noise.
    std::optional<double> skew_half_width{0.5};
    std::optional<double> kurt_half_width{0.5};
    Shape shape = Shape::Uniform;

    static ToleranceSpec none() {
        ToleranceSpec t;
        t.sd_multipliers.reset();
        t.skew_half_width.reset();
        t.kurt_half_width.reset();
        return t;
    }

    void validate() const;
};

enum class DiagnosticKind { Mean, Variance, Skewness, Kurtosis };

const char* kind_name(DiagnosticKind kind);

struct UnexpectednessResult {
    int location = -1;
    DiagnosticKind kind = DiagnosticKind::Mean;
    double u = 0.0;  // in (-1, 1); + means the emulator overestimates, - underestimates
    bool flag095 = false;
    bool flag0995 = false;
    long mc_draws_used = 0;
};

struct DiagnosticsConfig {
    int n_mc_mean = 10000;       // CDF-averaging draws for the mean diagnostic
    int n_mc_variance = 10000;   // CDF-averaging draws under sd tolerance
    int n_mc_normality = 10000;  // reference statistics for skewness/kurtosis
    // Propagate the emulator's mean uncertainty (V) into the skewness and
    // kurtosis reference distributions.
    bool include_mean_uncertainty = true;
    Exec exec = Exec::Parallel;
};

// U = 2(0.5 - p); maps a CDF position to the signed (-1,1) scale.
double unexpectedness(double p);

UnexpectednessResult mean_unexpectedness(const gp::PointPrediction& pred,
                                         const dist::SampleMoments& stats, int n_mc,
                                         RngStream& rng);

UnexpectednessResult variance_unexpectedness(const gp::PointPrediction& pred,
                                             const dist::SampleMoments& stats,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng);

UnexpectednessResult skewness_unexpectedness(const gp::PointPrediction& pred,
                                             std::span<const double> replicates,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng,
                                             bool include_mean_uncertainty = true);

UnexpectednessResult kurtosis_unexpectedness(const gp::PointPrediction& pred,
                                             std::span<const double> replicates,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng,
                                             bool include_mean_uncertainty = true);

// e_i = (y_i - M_i) / sqrt(V_i + sigma^2_i); one prediction per single run.
std::vector<double> standardized_errors(const std::vector<gp::PointPrediction>& preds,
                                        const Eigen::VectorXd& y);

// Decorrelated residuals from the greedy pivoted Cholesky factorization of
// the joint covariance (intrinsic variance already on its diagonal). Under a
// correct emulator the errors are i.i.d. standard normal; the pivot order
// records which original index each error position came from.
struct PivotedErrors {
    std::vector<double> errors;
    std::vector<int> pivot_order;
};
PivotedErrors pivoted_cholesky_errors(const Eigen::VectorXd& mean,
                                      Eigen::MatrixXd covariance,
                                      const Eigen::VectorXd& y);

// (theoretical standard-normal quantile at (i-0.5)/n, i-th order statistic).
std::vector<std::pair<double, double>> qq_points(std::span<const double> errors);

// Empirical coverage of the central predictive interval at each level,
// using V + sigma^2 as the total variance.
std::vector<std::pair<double, double>> credible_interval_coverage(
    const std::vector<gp::PointPrediction>& preds, const Eigen::VectorXd& y,
    std::span<const double> levels);

struct SummaryCounts {
    int n = 0;
    int negative = 0;
    int flag095 = 0;
    int flag0995 = 0;
};

struct ReportConfigEcho {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    ToleranceSpec tolerance;
    int n_mc_mean = 0;
    int n_mc_variance = 0;
    int n_mc_normality = 0;
    bool include_mean_uncertainty = true;
};

struct DiagnosticReport {
    int version = 1;
    ReportConfigEcho config;

    Eigen::MatrixXd locations;            // unique validation locations
    std::vector<int> replicate_counts;

    std::vector<UnexpectednessResult> mean_u;
    std::vector<UnexpectednessResult> variance_u;
    std::vector<UnexpectednessResult> skewness_u;
    std::vector<UnexpectednessResult> kurtosis_u;

    // Per-location failures (degenerate replicate pools etc.), kept out of
    // the U lists: pairs of (location, message).
    std::vector<std::pair<int, std::string>> skipped;

    // Deterministic whole-fit diagnostics over the expanded single runs.
    std::vector<double> standardized_errs;
    std::vector<double> pivoted_errs;
    std::vector<int> pivot_order;
    std::vector<std::pair<double, double>> qq;
    std::vector<std::pair<double, double>> coverage;

    SummaryCounts mean_summary, variance_summary, skewness_summary, kurtosis_summary;
};

SummaryCounts summarize(const std::vector<UnexpectednessResult>& results);

// Runs every applicable diagnostic for each validation location (skewness
// needs r >= 3, kurtosis r >= 4). Each (location, kind) pair draws from its
// own substream of `rng`, so the report does not depend on the thread count.
// Per-location failures are collected, not fatal, unless every location fails.
DiagnosticReport run_all(const gp::Model& model,
                         const data::ReplicatedDataset& validation,
                         const ToleranceSpec& tol, const DiagnosticsConfig& config,
                         const RngStream& rng);

// Same engine with precomputed predictions; the calibration tests drive this
// directly with synthetic predictive laws.
DiagnosticReport run_all_with_predictions(
    const std::vector<gp::PointPrediction>& preds,
    const std::optional<gp::JointPrediction>& joint,
    const data::ReplicatedDataset& validation, const ToleranceSpec& tol,
    const DiagnosticsConfig& config, const RngStream& rng);

}  // namespace stochdiag::diag
