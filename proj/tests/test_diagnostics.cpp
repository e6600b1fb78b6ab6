#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "stochdiag/diagnostics.hpp"
#include "stochdiag/errors.hpp"
#include "test_helpers.hpp"

using namespace stochdiag;

namespace {

gp::PointPrediction prediction(double mean, double mean_variance, double intrinsic) {
    gp::PointPrediction p;
    p.mean = mean;
    p.mean_variance = mean_variance;
    p.intrinsic_variance = intrinsic;
    return p;
}

dist::SampleMoments moments_of(const std::vector<double>& values) {
    return dist::sample_moments(values);
}

// Validation set drawn from the given predictive laws: per location one
// latent mean draw m ~ N(M, V), then r replicates N(m, sigma^2).
data::ReplicatedDataset synthetic_validation(
    const std::vector<gp::PointPrediction>& preds, int r, RngStream& rng) {
    const auto n = static_cast<Eigen::Index>(preds.size());
    Eigen::MatrixXd X(n * r, 1);
    Eigen::VectorXd y(n * r);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = preds[static_cast<std::size_t>(i)];
        const double m = p.mean + std::sqrt(p.mean_variance) * rng.normal();
        for (int k = 0; k < r; ++k) {
            X(i * r + k, 0) = static_cast<double>(i) / static_cast<double>(n);
            y[i * r + k] = m + std::sqrt(p.intrinsic_variance) * rng.normal();
        }
    }
    return data::group_runs(X, y);
}

}  // namespace

TEST_CASE("unexpectedness transform") {
    CHECK(diag::unexpectedness(0.5) == doctest::Approx(0.0));
    CHECK(diag::unexpectedness(0.0) == doctest::Approx(1.0));
    CHECK(diag::unexpectedness(1.0) == doctest::Approx(-1.0));
    CHECK(diag::unexpectedness(0.9995) == doctest::Approx(-0.999).epsilon(1e-12));
    CHECK_THROWS_AS(diag::unexpectedness(-0.1), std::domain_error);
    CHECK_THROWS_AS(diag::unexpectedness(1.1), std::domain_error);
    // decreasing in p
    CHECK(diag::unexpectedness(0.2) > diag::unexpectedness(0.8));
}

TEST_CASE("normal-case threshold correspondence") {
    // |U| of a normal observation at standardized error 2, 2.8, 3.29.
    CHECK(std::fabs(diag::unexpectedness(dist::std_normal_cdf(2.0))) ==
          doctest::Approx(0.95450).epsilon(1e-4));
    CHECK(std::fabs(diag::unexpectedness(dist::std_normal_cdf(2.8))) ==
          doctest::Approx(0.99489).epsilon(1e-4));
    CHECK(std::fabs(diag::unexpectedness(dist::std_normal_cdf(3.29))) ==
          doctest::Approx(0.99902).epsilon(1e-4));
}

TEST_CASE("mean unexpectedness closed forms") {
    SUBCASE("V = 0 and observed mean equal to prediction") {
        RngStream rng(50, 0);
        const auto result = diag::mean_unexpectedness(
            prediction(3.0, 0.0, 1.0), moments_of({2.0, 4.0}), 1000, rng);
        CHECK(result.u == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(!result.flag095);
    }
    SUBCASE("Cauchy closed form at r = 2") {
        // ybar - M = S/sqrt(2) gives t = 1 with df = 1: P = 0.75, U = -0.5
        RngStream rng(50, 1);
        const std::vector<double> replicates = {0.0, 2.0};  // mean 1, sd sqrt(2)
        const auto stats = moments_of(replicates);
        const double target_gap = stats.sd / std::sqrt(2.0);
        const auto result = diag::mean_unexpectedness(
            prediction(stats.mean - target_gap, 0.0, 1.0), stats, 1000, rng);
        CHECK(result.u == doctest::Approx(-0.5).epsilon(1e-10));
    }
    SUBCASE("far-above observation drives U to -1, far below to +1") {
        RngStream rng(50, 2);
        const auto high = diag::mean_unexpectedness(
            prediction(0.0, 0.01, 1.0), moments_of({99.0, 100.0, 101.0}), 4000, rng);
        CHECK(high.u < -0.99);
        CHECK(high.flag095);
        const auto low = diag::mean_unexpectedness(
            prediction(0.0, 0.01, 1.0), moments_of({-99.0, -100.0, -101.0}), 4000, rng);
        CHECK(low.u > 0.99);
    }
    SUBCASE("degenerate replicates raise an error") {
        RngStream rng(50, 3);
        CHECK_THROWS_AS(diag::mean_unexpectedness(prediction(0, 0, 1),
                                                  moments_of({1.0, 1.0, 1.0}), 100, rng),
                        InsufficientReplicationError);
    }
}

TEST_CASE("variance unexpectedness closed forms") {
    diag::ToleranceSpec no_tol = diag::ToleranceSpec::none();
    SUBCASE("chi-square(1) closed form") {
        RngStream rng(51, 0);
        // r = 2, observed S^2 = sigma^2: P = chi2_cdf(1,1), U = -0.36538
        const std::vector<double> replicates = {-0.5, 0.5};  // S^2 = 0.5
        const auto result = diag::variance_unexpectedness(
            prediction(0.0, 0.0, 0.5), moments_of(replicates), no_tol, 1000, rng);
        CHECK(result.u ==
              doctest::Approx(-(2.0 * dist::chi_square_cdf(1.0, 1) - 1.0)).epsilon(1e-10));
        CHECK(result.u == doctest::Approx(-0.3654).epsilon(1e-3));
    }
    SUBCASE("vanishing observed variance drives U to +1") {
        RngStream rng(51, 1);
        const std::vector<double> replicates = {1.0, 1.0 + 1e-9, 1.0 - 1e-9};
        const auto result = diag::variance_unexpectedness(
            prediction(1.0, 0.0, 1.0), moments_of(replicates), no_tol, 1000, rng);
        CHECK(result.u > 0.999);
    }
    SUBCASE("tolerance averaging shrinks extremity when the estimate is exact") {
        // S^2_obs = sigma^2 across random (r, scale) cases.
        RngStream case_rng(51, 2);
        diag::ToleranceSpec tol;  // default (0.8, 1.2) sd tolerance
        tol.skew_half_width.reset();
        tol.kurt_half_width.reset();
        for (int trial = 0; trial < 100; ++trial) {
            const int r = 2 + static_cast<int>(case_rng.next_u64() % 11);
            const double scale = std::exp(case_rng.uniform(-2.0, 2.0));
            dist::SampleMoments stats;
            stats.n = static_cast<std::size_t>(r);
            stats.mean = 0.0;
            stats.variance = scale * scale;
            stats.sd = scale;
            RngStream rng_raw(51, 100 + trial);
            RngStream rng_tol(51, 100 + trial);
            const auto raw = diag::variance_unexpectedness(
                prediction(0, 0, scale * scale), stats, no_tol, 4000, rng_raw);
            const auto tolerant = diag::variance_unexpectedness(
                prediction(0, 0, scale * scale), stats, tol, 4000, rng_tol);
            CHECK(std::fabs(tolerant.u) <= std::fabs(raw.u) + 0.02);
        }
    }
}

TEST_CASE("skewness unexpectedness") {
    diag::ToleranceSpec no_tol = diag::ToleranceSpec::none();
    SUBCASE("strong right skew drives U toward -1") {
        RngStream rng(52, 0);
        // replicates with big positive sample skewness vs a normal reference
        const std::vector<double> replicates = {0.0, 0.1, 0.05, 0.02, 5.0};
        const auto result = diag::skewness_unexpectedness(
            prediction(1.0, 0.0, 1.0), replicates, no_tol, 4000, rng);
        CHECK(result.u < -0.5);
    }
    SUBCASE("symmetric data sits near the reference center") {
        RngStream rng(52, 1);
        const std::vector<double> replicates = {-1.0, -0.5, 0.0, 0.5, 1.0};
        const auto result = diag::skewness_unexpectedness(
            prediction(0.0, 0.0, 1.0), replicates, no_tol, 4000, rng);
        CHECK(std::fabs(result.u) < 0.6);
    }
    SUBCASE("needs three replicates") {
        RngStream rng(52, 2);
        CHECK_THROWS_AS(
            diag::skewness_unexpectedness(prediction(0, 0, 1), std::vector<double>{1.0, 2.0},
                                          no_tol, 100, rng),
            InsufficientReplicationError);
    }
    SUBCASE("unattainable tolerance half-width") {
        RngStream rng(52, 3);
        diag::ToleranceSpec tol;
        tol.skew_half_width = 0.9953;
        CHECK_THROWS_AS(
            diag::skewness_unexpectedness(prediction(0, 0, 1),
                                          std::vector<double>{1.0, 2.0, 3.0}, tol, 100, rng),
            UnattainableShapeError);
    }
}

TEST_CASE("kurtosis unexpectedness") {
    diag::ToleranceSpec no_tol = diag::ToleranceSpec::none();
    SUBCASE("heavy-tailed pool drives U toward -1") {
        RngStream rng(53, 0);
        const std::vector<double> replicates = {-8.0, -0.1, -0.05, 0.05, 0.1, 8.0};
        const auto result = diag::kurtosis_unexpectedness(
            prediction(0.0, 0.0, 1.0), replicates, no_tol, 4000, rng);
        CHECK(result.u < -0.5);
    }
    SUBCASE("needs four replicates") {
        RngStream rng(53, 1);
        CHECK_THROWS_AS(diag::kurtosis_unexpectedness(prediction(0, 0, 1),
                                                      std::vector<double>{1.0, 2.0, 3.0},
                                                      no_tol, 100, rng),
                        InsufficientReplicationError);
    }
}

TEST_CASE("calibration: U uniform under truth-equals-emulator (small version)") {
    const int n_loc = 200;
    const int r = 5;
    std::vector<gp::PointPrediction> preds;
    for (int i = 0; i < n_loc; ++i) {
        preds.push_back(prediction(1.0 + 0.1 * i, 0.004, 1.0));
    }
    RngStream data_rng(54, 0);
    const auto validation = synthetic_validation(preds, r, data_rng);
    diag::DiagnosticsConfig config;
    config.n_mc_mean = 4000;
    config.n_mc_variance = 4000;
    config.n_mc_normality = 4000;
    const auto report =
        diag::run_all_with_predictions(preds, std::nullopt, validation,
                                       diag::ToleranceSpec::none(), config,
                                       RngStream(54, 1));
    auto uniform_cdf = [](double u) { return std::clamp(0.5 * (u + 1.0), 0.0, 1.0); };
    auto us_of = [](const std::vector<diag::UnexpectednessResult>& results) {
        std::vector<double> us;
        for (const auto& r_ : results) us.push_back(r_.u);
        return us;
    };
    CHECK(report.mean_u.size() == n_loc);
    CHECK(test_helpers::ks_p_value(us_of(report.mean_u), uniform_cdf) > 0.01);
    CHECK(test_helpers::ks_p_value(us_of(report.variance_u), uniform_cdf) > 0.01);
    CHECK(test_helpers::ks_p_value(us_of(report.skewness_u), uniform_cdf) > 0.01);
    CHECK(test_helpers::ks_p_value(us_of(report.kurtosis_u), uniform_cdf) > 0.01);
}

TEST_CASE("standardized errors") {
    std::vector<gp::PointPrediction> preds = {prediction(2.0, 0.25, 0.75)};
    SUBCASE("zero at the mean, two at two total sds") {
        Eigen::VectorXd y(1);
        y << 2.0;
        CHECK(diag::standardized_errors(preds, y)[0] == doctest::Approx(0.0));
        y << 4.0;  // 2 + 2*sqrt(0.25+0.75)
        CHECK(diag::standardized_errors(preds, y)[0] == doctest::Approx(2.0));
    }
    SUBCASE("KS-normal under a correct emulator") {
        RngStream rng(55, 0);
        const int n = 500;
        std::vector<gp::PointPrediction> many;
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            const auto p = prediction(i * 0.01, 0.2, 0.8);
            many.push_back(p);
            y[i] = p.mean + rng.normal();  // total variance 1
        }
        const auto errors = diag::standardized_errors(many, y);
        CHECK(test_helpers::ks_p_value(errors, dist::std_normal_cdf) > 0.01);
    }
}

TEST_CASE("pivoted Cholesky errors") {
    SUBCASE("1x1 reduces to the standardized error") {
        Eigen::VectorXd mean(1), y(1);
        mean << 1.0;
        y << 3.0;
        Eigen::MatrixXd cov(1, 1);
        cov << 4.0;
        const auto piv = diag::pivoted_cholesky_errors(mean, cov, y);
        CHECK(piv.errors[0] == doctest::Approx(1.0));
        CHECK(piv.pivot_order[0] == 0);
    }
    SUBCASE("diagonal covariance permutes by decreasing variance") {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
        Eigen::VectorXd y(3);
        y << 1.0, 2.0, 3.0;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
        cov.diagonal() << 1.0, 9.0, 4.0;
        const auto piv = diag::pivoted_cholesky_errors(mean, cov, y);
        CHECK(piv.pivot_order == std::vector<int>{1, 2, 0});
        CHECK(piv.errors[0] == doctest::Approx(2.0 / 3.0));
        CHECK(piv.errors[1] == doctest::Approx(3.0 / 2.0));
        CHECK(piv.errors[2] == doctest::Approx(1.0));
    }
    SUBCASE("whitening: empirical covariance of errors is near identity") {
        // Fixed correlated covariance; 200 synthetic draws.
        const int n = 4;
        Eigen::MatrixXd cov(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                cov(i, j) = std::exp(-0.5 * (i - j) * (i - j) / 4.0);
            }
        }
        cov.diagonal().array() += 0.1;
        const Eigen::LLT<Eigen::MatrixXd> chol(cov);
        const Eigen::MatrixXd L = chol.matrixL();
        RngStream rng(56, 0);
        Eigen::MatrixXd errors(200, n);
        for (int rep = 0; rep < 200; ++rep) {
            Eigen::VectorXd z(n);
            for (int i = 0; i < n; ++i) z[i] = rng.normal();
            const Eigen::VectorXd y = L * z;
            const auto piv =
                diag::pivoted_cholesky_errors(Eigen::VectorXd::Zero(n), cov, y);
            for (int i = 0; i < n; ++i) errors(rep, i) = piv.errors[static_cast<std::size_t>(i)];
        }
        const Eigen::MatrixXd centered =
            errors.rowwise() - errors.colwise().mean();
        const Eigen::MatrixXd empirical = centered.transpose() * centered / 199.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                CHECK(std::fabs(empirical(i, j) - (i == j ? 1.0 : 0.0)) < 0.35);
            }
        }
    }
    SUBCASE("non-PSD input raises a numerical error") {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
        Eigen::MatrixXd bad(2, 2);
        bad << 1.0, 2.0, 2.0, 1.0;
        CHECK_THROWS_AS(diag::pivoted_cholesky_errors(zero, bad, zero), NumericalError);
    }
}

TEST_CASE("qq points") {
    SUBCASE("single value pairs with the median quantile") {
        const std::vector<double> one = {1.7};
        const auto points = diag::qq_points(one);
        REQUIRE(points.size() == 1);
        CHECK(points[0].first == doctest::Approx(0.0));  // quantile at 0.5
        CHECK(points[0].second == doctest::Approx(1.7));
    }
    SUBCASE("normal sample hugs the diagonal") {
        RngStream rng(57, 0);
        std::vector<double> sample(20000);
        for (auto& v : sample) v = rng.normal();
        const auto points = diag::qq_points(sample);
        double worst = 0.0;
        for (const auto& [t, s] : points) {
            if (std::fabs(t) < 2.5) worst = std::max(worst, std::fabs(t - s));
        }
        CHECK(worst < 0.08);
    }
    SUBCASE("constant input gives a horizontal line") {
        const std::vector<double> flat = {2.0, 2.0, 2.0, 2.0, 2.0};
        for (const auto& [t, s] : diag::qq_points(flat)) {
            CHECK(s == 2.0);
        }
    }
}

TEST_CASE("credible interval coverage") {
    std::vector<gp::PointPrediction> preds;
    Eigen::VectorXd y(1000);
    RngStream rng(58, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto p = prediction(0.0, 0.5, 0.5);
        preds.push_back(p);
        y[i] = rng.normal();  // total sd 1
    }
    const std::vector<double> levels = {0.0, 0.5, 0.95};
    const auto curve = diag::credible_interval_coverage(preds, y, levels);
    CHECK(curve[0].second == doctest::Approx(0.0));
    CHECK(curve[1].second == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::fabs(curve[2].second - 0.95) < 0.02);

    SUBCASE("exact means cover at all positive levels") {
        Eigen::VectorXd exact = Eigen::VectorXd::Zero(1000);
        const auto perfect = diag::credible_interval_coverage(preds, exact, levels);
        CHECK(perfect[1].second == doctest::Approx(1.0));
        CHECK(perfect[2].second == doctest::Approx(1.0));
    }
}

TEST_CASE("run_all orchestration") {
    std::vector<gp::PointPrediction> preds;
    for (int i = 0; i < 8; ++i) preds.push_back(prediction(i * 0.5, 0.01, 1.0));
    diag::DiagnosticsConfig config;
    config.n_mc_mean = 500;
    config.n_mc_variance = 500;
    config.n_mc_normality = 500;
    const diag::ToleranceSpec tol;  // defaults

    SUBCASE("r = 2 everywhere: no skewness or kurtosis entries") {
        RngStream data_rng(59, 0);
        const auto validation = synthetic_validation(preds, 2, data_rng);
        const auto report = diag::run_all_with_predictions(
            preds, std::nullopt, validation, tol, config, RngStream(59, 1));
        CHECK(report.mean_u.size() == 8);
        CHECK(report.variance_u.size() == 8);
        CHECK(report.skewness_u.empty());
        CHECK(report.kurtosis_u.empty());
        CHECK(report.skipped.empty());
    }
    SUBCASE("flag counts recompute from the U lists; reports are reproducible") {
        RngStream data_rng(59, 2);
        const auto validation = synthetic_validation(preds, 5, data_rng);
        const auto report = diag::run_all_with_predictions(
            preds, std::nullopt, validation, tol, config, RngStream(59, 3));
        CHECK(report.skewness_u.size() == 8);
        CHECK(report.kurtosis_u.size() == 8);
        const auto recount = diag::summarize(report.mean_u);
        CHECK(recount.flag095 == report.mean_summary.flag095);
        CHECK(recount.flag0995 == report.mean_summary.flag0995);
        CHECK(recount.negative == report.mean_summary.negative);

        const auto again = diag::run_all_with_predictions(
            preds, std::nullopt, validation, tol, config, RngStream(59, 3));
        for (std::size_t i = 0; i < report.mean_u.size(); ++i) {
            CHECK(report.mean_u[i].u == again.mean_u[i].u);
            CHECK(report.skewness_u[i].u == again.skewness_u[i].u);
        }
    }
    SUBCASE("serial and parallel execution produce identical reports") {
        RngStream data_rng(59, 4);
        const auto validation = synthetic_validation(preds, 5, data_rng);
        diag::DiagnosticsConfig serial = config;
        serial.exec = Exec::Serial;
        diag::DiagnosticsConfig parallel = config;
        parallel.exec = Exec::Parallel;
        const auto a = diag::run_all_with_predictions(
            preds, std::nullopt, validation, tol, serial, RngStream(59, 5));
        const auto b = diag::run_all_with_predictions(
            preds, std::nullopt, validation, tol, parallel, RngStream(59, 5));
        REQUIRE(a.mean_u.size() == b.mean_u.size());
        for (std::size_t i = 0; i < a.mean_u.size(); ++i) {
            CHECK(a.mean_u[i].u == b.mean_u[i].u);
            CHECK(a.variance_u[i].u == b.variance_u[i].u);
            CHECK(a.skewness_u[i].u == b.skewness_u[i].u);
            CHECK(a.kurtosis_u[i].u == b.kurtosis_u[i].u);
        }
    }
    SUBCASE("degenerate replicate pools are skipped, not fatal") {
        Eigen::MatrixXd X(7, 1);
        Eigen::VectorXd y(7);
        X << 0.1, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2;
        y << 5.0, 5.0, 5.0, 5.0, 1.0, 2.0, 3.0;  // first pool has sd 0
        const auto validation = data::group_runs(X, y);
        std::vector<gp::PointPrediction> two = {prediction(5, 0.01, 1.0),
                                                prediction(2, 0.01, 1.0)};
        const auto report = diag::run_all_with_predictions(
            two, std::nullopt, validation, tol, config, RngStream(59, 6));
        CHECK(!report.skipped.empty());
        CHECK(report.mean_u.size() == 1);
        CHECK(report.mean_u[0].location == 1);
    }
    SUBCASE("all locations failing is fatal") {
        Eigen::MatrixXd X(4, 1);
        Eigen::VectorXd y(4);
        X << 0.1, 0.1, 0.2, 0.2;
        y << 3.0, 3.0, 4.0, 4.0;  // both pools degenerate
        const auto validation = data::group_runs(X, y);
        std::vector<gp::PointPrediction> two = {prediction(3, 0.01, 1.0),
                                                prediction(4, 0.01, 1.0)};
        CHECK_THROWS_AS(diag::run_all_with_predictions(two, std::nullopt, validation, tol,
                                                       config, RngStream(59, 7)),
                        DataError);
    }
}

TEST_CASE("location shift invariance of the U values") {
    std::vector<gp::PointPrediction> preds;
    for (int i = 0; i < 5; ++i) preds.push_back(prediction(i * 1.0, 0.02, 1.0));
    RngStream data_rng(60, 0);
    const auto validation = synthetic_validation(preds, 5, data_rng);

    const double shift = 123.25;
    data::ReplicatedDataset shifted = validation;
    for (auto& pool : shifted.replicates) {
        for (auto& v : pool) v += shift;
    }
    for (std::size_t i = 0; i < shifted.moments.size(); ++i) {
        if (shifted.moments[i]) {
            shifted.moments[i] = dist::sample_moments(shifted.replicates[i]);
        }
    }
    std::vector<gp::PointPrediction> shifted_preds = preds;
    for (auto& p : shifted_preds) p.mean += shift;

    diag::DiagnosticsConfig config;
    config.n_mc_mean = 2000;
    config.n_mc_variance = 2000;
    config.n_mc_normality = 2000;
    const diag::ToleranceSpec tol;
    const auto a = diag::run_all_with_predictions(preds, std::nullopt, validation, tol,
                                                  config, RngStream(60, 1));
    const auto b = diag::run_all_with_predictions(shifted_preds, std::nullopt, shifted,
                                                  tol, config, RngStream(60, 1));
    for (std::size_t i = 0; i < a.mean_u.size(); ++i) {
        CHECK(a.mean_u[i].u == doctest::Approx(b.mean_u[i].u).epsilon(1e-9));
        CHECK(a.variance_u[i].u == doctest::Approx(b.variance_u[i].u).epsilon(1e-9));
        CHECK(a.skewness_u[i].u == doctest::Approx(b.skewness_u[i].u).epsilon(1e-9));
        CHECK(a.kurtosis_u[i].u == doctest::Approx(b.kurtosis_u[i].u).epsilon(1e-9));
    }
}

TEST_CASE("U is nonincreasing in the observed statistic for a fixed reference") {
    RngStream rng(62, 0);
    std::vector<double> reference(501);
    for (auto& v : reference) v = rng.normal();
    double last = 1.0;
    for (double x = -4.0; x <= 4.0; x += 0.05) {
        const double u = diag::unexpectedness(dist::empirical_cdf(reference, x));
        CHECK(u <= last);
        last = u;
    }
}

TEST_CASE("tolerance widening does not increase the expected flag rate") {
    std::vector<gp::PointPrediction> preds;
    for (int i = 0; i < 20; ++i) preds.push_back(prediction(0.0, 0.0, 1.0));
    int flags_narrow = 0, flags_wide = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RngStream data_rng(61, seed);
        const auto validation = synthetic_validation(preds, 8, data_rng);
        diag::DiagnosticsConfig config;
        config.n_mc_mean = 1000;
        config.n_mc_variance = 1000;
        config.n_mc_normality = 1000;
        diag::ToleranceSpec narrow = diag::ToleranceSpec::none();
        diag::ToleranceSpec wide;
        wide.sd_multipliers = {{0.7, 1.3}};
        wide.skew_half_width = 0.6;
        wide.kurt_half_width = 0.6;
        const auto a = diag::run_all_with_predictions(
            preds, std::nullopt, validation, narrow, config, RngStream(61, 1000 + seed));
        const auto b = diag::run_all_with_predictions(
            preds, std::nullopt, validation, wide, config, RngStream(61, 1000 + seed));
        flags_narrow += diag::summarize(a.variance_u).flag095 +
                        diag::summarize(a.skewness_u).flag095 +
                        diag::summarize(a.kurtosis_u).flag095;
        flags_wide += diag::summarize(b.variance_u).flag095 +
                      diag::summarize(b.skewness_u).flag095 +
                      diag::summarize(b.kurtosis_u).flag095;
    }
    CHECK(flags_wide <= flags_narrow);
}
