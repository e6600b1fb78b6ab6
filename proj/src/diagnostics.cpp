#include "stochdiag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stochdiag/errors.hpp"

namespace stochdiag::diag {

namespace {

// Draw from a symmetric tolerance distribution on (a, b).
double tolerance_draw(double a, double b, ToleranceSpec::Shape shape, RngStream& rng) {
    if (shape == ToleranceSpec::Shape::Triangular) {
        // Symmetric triangular = mean of two uniforms.
        return 0.5 * (rng.uniform(a, b) + rng.uniform(a, b));
    }
    return rng.uniform(a, b);
}

// Quantile of the tolerance distribution, for stratified averaging.
double tolerance_quantile(double a, double b, ToleranceSpec::Shape shape, double u) {
    if (shape == ToleranceSpec::Shape::Triangular) {
        const double c = 0.5 * (a + b);
        return u < 0.5 ? a + std::sqrt(u * (b - a) * (c - a))
                       : b - std::sqrt((1.0 - u) * (b - a) * (b - c));
    }
    return a + u * (b - a);
}

UnexpectednessResult make_result(DiagnosticKind kind, double p, long draws) {
    UnexpectednessResult r;
    r.kind = kind;
    r.u = unexpectedness(p);
    r.flag095 = std::fabs(r.u) > kFlagLevel;
    r.flag0995 = std::fabs(r.u) > kStrongFlagLevel;
    r.mc_draws_used = draws;
    return r;
}

double draw_from(const dist::SkewNormalParams& p, RngStream& rng) {
    return dist::skew_normal_draw(p, rng);
}

double draw_from(const dist::GenNormalParams& p, RngStream& rng) {
    return dist::gen_normal_draw(p, rng);
}

// Shared machinery of the skewness/kurtosis diagnostics: build a Monte Carlo
// reference distribution of the sample statistic under the emulator's
// predictive law plus shape tolerance, then rank the observed statistic.
template <class ShapeSampler, class StatisticOf>
UnexpectednessResult normality_unexpectedness(
    DiagnosticKind kind, const gp::PointPrediction& pred,
    std::span<const double> replicates, int n_mc, RngStream& rng,
    bool include_mean_uncertainty, const ShapeSampler& draw_shape_params,
    const StatisticOf& statistic_of) {
    const int r = static_cast<int>(replicates.size());
    const dist::SampleMoments observed = dist::sample_moments(replicates);
    if (!(observed.sd > 0.0)) {
        throw InsufficientReplicationError(
            "normality diagnostics: replicate pool is degenerate (sd = 0)");
    }
    if (!(pred.intrinsic_variance > 0.0)) {
        throw NumericalError("normality diagnostics: nonpositive intrinsic variance");
    }
    const double sigma_hat = std::sqrt(pred.intrinsic_variance);
    const double mean_sd =
        include_mean_uncertainty && pred.mean_variance > 0.0
            ? std::sqrt(pred.mean_variance)
            : 0.0;

    const double observed_stat = statistic_of(observed);
    std::vector<double> reference(static_cast<std::size_t>(n_mc));
    std::vector<double> draws(static_cast<std::size_t>(r));
    for (auto& ref : reference) {
        const double m = pred.mean + mean_sd * rng.normal();
        const auto params = draw_shape_params(m, sigma_hat, rng);
        for (auto& v : draws) v = draw_from(params, rng);
        const dist::SampleMoments sim = dist::sample_moments(draws);
        // A zero-sd simulated pool has probability zero under continuous
        // sampling; regenerate deterministically by falling back to 0.
        ref = sim.sd > 0.0 ? statistic_of(sim) : 0.0;
    }
    const double p = dist::empirical_cdf(reference, observed_stat);
    return make_result(kind, p, n_mc);
}

}  // namespace

void ToleranceSpec::validate() const {
    if (sd_multipliers) {
        if (!(sd_multipliers->first > 0.0) ||
            !(sd_multipliers->first < sd_multipliers->second)) {
            throw std::domain_error(
                "ToleranceSpec: sd multipliers must be positive and ordered");
        }
    }
    if (skew_half_width) {
        if (!(*skew_half_width >= 0.0)) {
            throw std::domain_error("ToleranceSpec: skew half-width must be >= 0");
        }
        if (*skew_half_width >= dist::kMaxSkewNormalSkewness) {
            throw UnattainableShapeError(
                "ToleranceSpec: skew half-width must be below 0.99527");
        }
    }
    if (kurt_half_width && !(*kurt_half_width >= 0.0)) {
        throw std::domain_error("ToleranceSpec: kurtosis half-width must be >= 0");
    }
}

const char* kind_name(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::Mean: return "mean";
        case DiagnosticKind::Variance: return "variance";
        case DiagnosticKind::Skewness: return "skewness";
        case DiagnosticKind::Kurtosis: return "kurtosis";
    }
    return "unknown";
}

double unexpectedness(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("unexpectedness: need p in [0,1]");
    }
    return 2.0 * (0.5 - p);
}

UnexpectednessResult mean_unexpectedness(const gp::PointPrediction& pred,
                                         const dist::SampleMoments& stats, int n_mc,
                                         RngStream& rng) {
    if (stats.n < 2) {
        throw InsufficientReplicationError("mean diagnostic: need r >= 2 replicates");
    }
    if (!(stats.sd > 0.0)) {
        throw InsufficientReplicationError(
            "mean diagnostic: replicate pool is degenerate (sd = 0)");
    }
    const int df = static_cast<int>(stats.n) - 1;
    const double scale = std::sqrt(static_cast<double>(stats.n)) / stats.sd;
    // With no mean uncertainty the t position is exact; otherwise average the
    // t CDF over draws of the latent mean.
    if (!(pred.mean_variance > 0.0)) {
        const double p = dist::student_t_cdf((stats.mean - pred.mean) * scale, df);
        auto result = make_result(DiagnosticKind::Mean, p, 1);
        return result;
    }
    const double mean_sd = std::sqrt(pred.mean_variance);
    double acc = 0.0;
    for (int k = 0; k < n_mc; ++k) {
        const double m = pred.mean + mean_sd * rng.normal();
        acc += dist::student_t_cdf((stats.mean - m) * scale, df);
    }
    return make_result(DiagnosticKind::Mean, acc / n_mc, n_mc);
}

UnexpectednessResult variance_unexpectedness(const gp::PointPrediction& pred,
                                             const dist::SampleMoments& stats,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng) {
    if (stats.n < 2) {
        throw InsufficientReplicationError("variance diagnostic: need r >= 2 replicates");
    }
    if (!(stats.sd > 0.0)) {
        throw InsufficientReplicationError(
            "variance diagnostic: replicate pool is degenerate (sd = 0)");
    }
    if (!(pred.intrinsic_variance > 0.0)) {
        throw NumericalError("variance diagnostic: nonpositive intrinsic variance");
    }
    tol.validate();
    const int df = static_cast<int>(stats.n) - 1;
    const double statistic = df * stats.variance;
    if (!tol.sd_multipliers) {
        const double p = dist::chi_square_cdf(statistic / pred.intrinsic_variance, df);
        return make_result(DiagnosticKind::Variance, p, 1);
    }
    // Average the chi-square CDF over the tolerance distribution on the
    // predicted standard deviation. Stratified-jittered draws: the integrand
    // is smooth and one-dimensional, so stratification removes nearly all of
    // the Monte Carlo error at the same cost.
    const double sigma_hat = std::sqrt(pred.intrinsic_variance);
    const double lo = tol.sd_multipliers->first * sigma_hat;
    const double hi = tol.sd_multipliers->second * sigma_hat;
    double acc = 0.0;
    for (int k = 0; k < n_mc; ++k) {
        const double u = (k + rng.uniform01()) / n_mc;
        const double sigma = tolerance_quantile(lo, hi, tol.shape, u);
        acc += dist::chi_square_cdf(statistic / (sigma * sigma), df);
    }
    return make_result(DiagnosticKind::Variance, acc / n_mc, n_mc);
}

UnexpectednessResult skewness_unexpectedness(const gp::PointPrediction& pred,
                                             std::span<const double> replicates,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng,
                                             bool include_mean_uncertainty) {
    if (replicates.size() < 3) {
        throw InsufficientReplicationError("skewness diagnostic: need r >= 3 replicates");
    }
    tol.validate();
    const double width = tol.skew_half_width.value_or(0.0);
    auto draw_params = [&](double mean, double sd, RngStream& stream) {
        dist::SkewNormalParams shape;
        shape.alpha = width > 0.0
                          ? dist::skewness_to_alpha(
                                tolerance_draw(-width, width, tol.shape, stream))
                          : 0.0;
        return dist::moment_matched(mean, sd, shape);
    };
    auto statistic = [](const dist::SampleMoments& m) { return *m.skewness; };
    auto result = normality_unexpectedness(DiagnosticKind::Skewness, pred, replicates,
                                           n_mc, rng, include_mean_uncertainty,
                                           draw_params, statistic);
    return result;
}

UnexpectednessResult kurtosis_unexpectedness(const gp::PointPrediction& pred,
                                             std::span<const double> replicates,
                                             const ToleranceSpec& tol, int n_mc,
                                             RngStream& rng,
                                             bool include_mean_uncertainty) {
    if (replicates.size() < 4) {
        throw InsufficientReplicationError("kurtosis diagnostic: need r >= 4 replicates");
    }
    tol.validate();
    const double width = tol.kurt_half_width.value_or(0.0);
    auto draw_params = [&](double mean, double sd, RngStream& stream) {
        dist::GenNormalParams shape;
        shape.beta = width > 0.0
                         ? dist::kurtosis_to_beta(
                               tolerance_draw(-width, width, tol.shape, stream))
                         : 2.0;
        return dist::moment_matched(mean, sd, shape);
    };
    auto statistic = [](const dist::SampleMoments& m) { return *m.excess_kurtosis; };
    auto result = normality_unexpectedness(DiagnosticKind::Kurtosis, pred, replicates,
                                           n_mc, rng, include_mean_uncertainty,
                                           draw_params, statistic);
    return result;
}

std::vector<double> standardized_errors(const std::vector<gp::PointPrediction>& preds,
                                        const Eigen::VectorXd& y) {
    if (static_cast<Eigen::Index>(preds.size()) != y.size()) {
        throw std::domain_error("standardized_errors: one prediction per observation");
    }
    std::vector<double> errors(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double total = preds[i].mean_variance + preds[i].intrinsic_variance;
        if (!(total > 0.0)) {
            throw NumericalError("standardized_errors: nonpositive total variance");
        }
        errors[i] = (y[static_cast<Eigen::Index>(i)] - preds[i].mean) / std::sqrt(total);
    }
    return errors;
}

PivotedErrors pivoted_cholesky_errors(const Eigen::VectorXd& mean,
                                      Eigen::MatrixXd covariance,
                                      const Eigen::VectorXd& y) {
    const Eigen::Index n = covariance.rows();
    if (covariance.cols() != n || mean.size() != n || y.size() != n) {
        throw std::domain_error("pivoted_cholesky_errors: dimension mismatch");
    }
    Eigen::VectorXd residual = y - mean;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);

    // In-place greedy pivoted Cholesky: at step k swap the largest remaining
    // diagonal (lowest index on ties) into position k.
    Eigen::MatrixXd a = std::move(covariance);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index pivot = k;
        for (Eigen::Index j = k + 1; j < n; ++j) {
            if (a(j, j) > a(pivot, pivot)) pivot = j;
        }
        if (pivot != k) {
            a.row(k).swap(a.row(pivot));
            a.col(k).swap(a.col(pivot));
            std::swap(residual[k], residual[pivot]);
            std::swap(order[static_cast<std::size_t>(k)],
                      order[static_cast<std::size_t>(pivot)]);
        }
        if (!(a(k, k) > 0.0)) {
            throw NumericalError(
                "pivoted_cholesky_errors: covariance is not positive definite");
        }
        const double root = std::sqrt(a(k, k));
        a(k, k) = root;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            a(i, k) /= root;
        }
        // Full symmetric trailing update so later row/column swaps stay valid.
        for (Eigen::Index j = k + 1; j < n; ++j) {
            const double ljk = a(j, k);
            for (Eigen::Index i = k + 1; i < n; ++i) {
                a(i, j) -= a(i, k) * ljk;
            }
        }
    }

    // Forward substitution G z = P^T (y - m).
    PivotedErrors out;
    out.errors.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = residual[i];
        for (Eigen::Index j = 0; j < i; ++j) {
            acc -= a(i, j) * out.errors[static_cast<std::size_t>(j)];
        }
        out.errors[static_cast<std::size_t>(i)] = acc / a(i, i);
    }
    out.pivot_order = std::move(order);
    return out;
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> errors) {
    if (errors.empty()) {
        throw std::domain_error("qq_points: need at least one error");
    }
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> points(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        points[i] = {dist::std_normal_quantile((static_cast<double>(i) + 0.5) / n),
                     sorted[i]};
    }
    return points;
}

std::vector<std::pair<double, double>> credible_interval_coverage(
    const std::vector<gp::PointPrediction>& preds, const Eigen::VectorXd& y,
    std::span<const double> levels) {
    if (static_cast<Eigen::Index>(preds.size()) != y.size()) {
        throw std::domain_error("credible_interval_coverage: size mismatch");
    }
    std::vector<std::pair<double, double>> curve;
    curve.reserve(levels.size());
    for (double level : levels) {
        if (!(level >= 0.0 && level < 1.0)) {
            throw std::domain_error("credible_interval_coverage: levels must lie in [0,1)");
        }
        const double z = level > 0.0 ? dist::std_normal_quantile(0.5 * (1.0 + level)) : 0.0;
        int inside = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double total = preds[i].mean_variance + preds[i].intrinsic_variance;
            const double half_width = z * std::sqrt(std::max(total, 0.0));
            if (std::fabs(y[static_cast<Eigen::Index>(i)] - preds[i].mean) <= half_width) {
                ++inside;
            }
        }
        curve.emplace_back(level, static_cast<double>(inside) /
                                      static_cast<double>(preds.size()));
    }
    return curve;
}

SummaryCounts summarize(const std::vector<UnexpectednessResult>& results) {
    SummaryCounts counts;
    counts.n = static_cast<int>(results.size());
    for (const auto& r : results) {
        if (r.u < 0.0) ++counts.negative;
        if (r.flag095) ++counts.flag095;
        if (r.flag0995) ++counts.flag0995;
    }
    return counts;
}

namespace {

// Substream keys: one per (location, diagnostic kind) pair.
std::uint64_t task_key(int location, DiagnosticKind kind) {
    return (static_cast<std::uint64_t>(kind) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(location));
}

}  // namespace

DiagnosticReport run_all_with_predictions(
    const std::vector<gp::PointPrediction>& preds,
    const std::optional<gp::JointPrediction>& joint,
    const data::ReplicatedDataset& validation, const ToleranceSpec& tol,
    const DiagnosticsConfig& config, const RngStream& rng) {
    tol.validate();
    const std::size_t n_loc = validation.n_locations();
    if (preds.size() != n_loc) {
        throw std::domain_error("run_all: one prediction per validation location");
    }
    if (n_loc == 0) {
        throw DataError("run_all: empty validation set");
    }

    DiagnosticReport report;
    report.config.seed = rng.seed();
    report.config.stream_id = rng.stream_id();
    report.config.tolerance = tol;
    report.config.n_mc_mean = config.n_mc_mean;
    report.config.n_mc_variance = config.n_mc_variance;
    report.config.n_mc_normality = config.n_mc_normality;
    report.config.include_mean_uncertainty = config.include_mean_uncertainty;
    report.locations = validation.locations;
    report.replicate_counts.resize(n_loc);
    for (std::size_t i = 0; i < n_loc; ++i) {
        report.replicate_counts[i] = validation.replicate_count(i);
    }

    // Slot per (location, kind); empty slots are either inapplicable (too few
    // replicates) or failed, with failures collected in `skipped`.
    std::vector<std::optional<UnexpectednessResult>> slots(4 * n_loc);
    std::vector<std::optional<std::string>> failures(4 * n_loc);
    const DiagnosticKind kinds[4] = {DiagnosticKind::Mean, DiagnosticKind::Variance,
                                     DiagnosticKind::Skewness, DiagnosticKind::Kurtosis};

    parallel_for(4 * n_loc, config.exec, [&](std::size_t slot) {
        const auto loc = static_cast<int>(slot / 4);
        const DiagnosticKind kind = kinds[slot % 4];
        const auto& pool = validation.replicates[static_cast<std::size_t>(loc)];
        const int r = static_cast<int>(pool.size());
        const int min_r = kind == DiagnosticKind::Kurtosis   ? 4
                          : kind == DiagnosticKind::Skewness ? 3
                                                             : 2;
        if (r < min_r) return;
        RngStream task_rng = rng.substream(task_key(loc, kind));
        try {
            const auto& pred = preds[static_cast<std::size_t>(loc)];
            UnexpectednessResult result;
            switch (kind) {
                case DiagnosticKind::Mean:
                    result = mean_unexpectedness(pred, dist::sample_moments(pool),
                                                 config.n_mc_mean, task_rng);
                    break;
                case DiagnosticKind::Variance:
                    result = variance_unexpectedness(pred, dist::sample_moments(pool),
                                                     tol, config.n_mc_variance, task_rng);
                    break;
                case DiagnosticKind::Skewness:
                    result = skewness_unexpectedness(pred, pool, tol,
                                                     config.n_mc_normality, task_rng,
                                                     config.include_mean_uncertainty);
                    break;
                case DiagnosticKind::Kurtosis:
                    result = kurtosis_unexpectedness(pred, pool, tol,
                                                     config.n_mc_normality, task_rng,
                                                     config.include_mean_uncertainty);
                    break;
            }
            result.location = loc;
            slots[slot] = result;
        } catch (const std::exception& e) {
            failures[slot] = std::string(kind_name(kind)) + ": " + e.what();
        }
    });

    bool any_ok = false;
    for (std::size_t slot = 0; slot < slots.size(); ++slot) {
        const auto loc = static_cast<int>(slot / 4);
        if (failures[slot]) {
            report.skipped.emplace_back(loc, *failures[slot]);
            continue;
        }
        if (!slots[slot]) continue;
        any_ok = true;
        switch (kinds[slot % 4]) {
            case DiagnosticKind::Mean: report.mean_u.push_back(*slots[slot]); break;
            case DiagnosticKind::Variance: report.variance_u.push_back(*slots[slot]); break;
            case DiagnosticKind::Skewness: report.skewness_u.push_back(*slots[slot]); break;
            case DiagnosticKind::Kurtosis: report.kurtosis_u.push_back(*slots[slot]); break;
        }
    }
    if (!any_ok) {
        throw DataError("run_all: every validation location failed");
    }

    // Deterministic whole-fit diagnostics over the expanded runs.
    const Eigen::VectorXd y_runs = validation.expanded().second;
    std::vector<gp::PointPrediction> run_preds;
    run_preds.reserve(static_cast<std::size_t>(y_runs.size()));
    for (std::size_t i = 0; i < n_loc; ++i) {
        for (std::size_t k = 0; k < validation.replicates[i].size(); ++k) {
            run_preds.push_back(preds[i]);
        }
    }
    report.standardized_errs = standardized_errors(run_preds, y_runs);
    if (joint) {
        Eigen::MatrixXd total_cov = joint->covariance;
        for (Eigen::Index i = 0; i < total_cov.rows(); ++i) {
            total_cov(i, i) += run_preds[static_cast<std::size_t>(i)].intrinsic_variance;
        }
        auto pivoted = pivoted_cholesky_errors(joint->mean, std::move(total_cov), y_runs);
        report.pivoted_errs = std::move(pivoted.errors);
        report.pivot_order = std::move(pivoted.pivot_order);
    }
    report.qq = qq_points(report.standardized_errs);
    std::vector<double> levels;
    for (int k = 0; k <= 19; ++k) levels.push_back(0.05 * k);
    levels.push_back(0.99);
    report.coverage = credible_interval_coverage(run_preds, y_runs, levels);

    report.mean_summary = summarize(report.mean_u);
    report.variance_summary = summarize(report.variance_u);
    report.skewness_summary = summarize(report.skewness_u);
    report.kurtosis_summary = summarize(report.kurtosis_u);
    return report;
}

DiagnosticReport run_all(const gp::Model& model,
                         const data::ReplicatedDataset& validation,
                         const ToleranceSpec& tol, const DiagnosticsConfig& config,
                         const RngStream& rng) {
    const auto preds = gp::predict(model, validation.locations);
    const Eigen::MatrixXd X_runs = validation.expanded().first;
    std::optional<gp::JointPrediction> joint;
    // Joint factorization is only worthwhile at desk scale.
    if (X_runs.rows() <= 2000) {
        joint = gp::joint_predict(model, X_runs);
    }
    return run_all_with_predictions(preds, joint, validation, tol, config, rng);
}

}  // namespace stochdiag::diag
