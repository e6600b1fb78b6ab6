#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "stochdiag/distributions.hpp"
#include "stochdiag/errors.hpp"
#include "stochdiag/rng.hpp"
#include "test_helpers.hpp"

using namespace stochdiag;
using test_helpers::simpson;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sn_pdf(const dist::SkewNormalParams& p, double x) {
    const double z = (x - p.location) / p.scale;
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
    return 2.0 / p.scale * phi * dist::std_normal_cdf(p.alpha * z);
}

double gn_pdf(const dist::GenNormalParams& p, double x) {
    const double z = std::fabs(x - p.location) / p.scale;
    return p.beta / (2.0 * p.scale * std::exp(std::lgamma(1.0 / p.beta))) *
           std::exp(-std::pow(z, p.beta));
}

}  // namespace

TEST_CASE("std_normal_cdf matches closed-form and tabulated values") {
    CHECK(dist::std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // scipy.stats.norm.cdf reference values
    CHECK(dist::std_normal_cdf(1.0) == doctest::Approx(0.84134474606854295).epsilon(1e-11));
    CHECK(dist::std_normal_cdf(2.0) == doctest::Approx(0.97724986805182079).epsilon(1e-11));
    CHECK(dist::std_normal_cdf(3.29) == doctest::Approx(0.99949906308621428).epsilon(1e-11));
    CHECK(dist::std_normal_cdf(-1.0) ==
          doctest::Approx(1.0 - dist::std_normal_cdf(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(dist::std_normal_cdf(std::nan("")), std::domain_error);
}

TEST_CASE("CDFs agree with Monte Carlo oracles at the probe points") {
    // 10^7 draws; tolerance is 3 Monte Carlo standard errors.
    const int n = 10000000;
    const std::vector<double> probes = {-3.0, -1.0, 0.0, 1.0, 3.0};

    SUBCASE("standard normal") {
        RngStream rng(2024, 1);
        std::vector<int> counts(probes.size(), 0);
        for (int i = 0; i < n; ++i) {
            const double z = rng.normal();
            for (std::size_t k = 0; k < probes.size(); ++k) {
                if (z <= probes[k]) ++counts[k];
            }
        }
        for (std::size_t k = 0; k < probes.size(); ++k) {
            const double p = dist::std_normal_cdf(probes[k]);
            const double se = std::sqrt(p * (1.0 - p) / n);
            CHECK(std::fabs(static_cast<double>(counts[k]) / n - p) <= 3.0 * se + 1e-12);
        }
    }

    SUBCASE("student t, df = 3") {
        RngStream rng(2024, 2);
        std::vector<int> counts(probes.size(), 0);
        for (int i = 0; i < n; ++i) {
            const double z = rng.normal();
            double w = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double g = rng.normal();
                w += g * g;
            }
            const double t = z / std::sqrt(w / 3.0);
            for (std::size_t k = 0; k < probes.size(); ++k) {
                if (t <= probes[k]) ++counts[k];
            }
        }
        for (std::size_t k = 0; k < probes.size(); ++k) {
            const double p = dist::student_t_cdf(probes[k], 3);
            const double se = std::sqrt(p * (1.0 - p) / n);
            CHECK(std::fabs(static_cast<double>(counts[k]) / n - p) <= 3.0 * se + 1e-12);
        }
    }

    SUBCASE("chi-square, df = 4 (probes transformed to x = df + probe*sqrt(2 df))") {
        RngStream rng(2024, 3);
        std::vector<double> xs;
        for (double probe : probes) xs.push_back(std::max(0.1, 4.0 + probe * std::sqrt(8.0)));
        std::vector<int> counts(probes.size(), 0);
        for (int i = 0; i < n; ++i) {
            double w = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double g = rng.normal();
                w += g * g;
            }
            for (std::size_t k = 0; k < xs.size(); ++k) {
                if (w <= xs[k]) ++counts[k];
            }
        }
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double p = dist::chi_square_cdf(xs[k], 4);
            const double se = std::sqrt(p * (1.0 - p) / n);
            CHECK(std::fabs(static_cast<double>(counts[k]) / n - p) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("student_t_cdf closed forms and normal limit") {
    CHECK(dist::student_t_cdf(0.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist::student_t_cdf(0.0, 50) == doctest::Approx(0.5).epsilon(1e-12));
    // Cauchy closed form 0.5 + atan(t)/pi
    CHECK(dist::student_t_cdf(1.0, 1) == doctest::Approx(0.75).epsilon(1e-11));
    CHECK(dist::student_t_cdf(-2.5, 1) ==
          doctest::Approx(0.5 + std::atan(-2.5) / kPi).epsilon(1e-11));
    // scipy.stats.t.cdf(1.5, 4) = 0.896 exactly
    CHECK(dist::student_t_cdf(1.5, 4) == doctest::Approx(0.896).epsilon(1e-11));
    CHECK(dist::student_t_cdf(-2.25, 9) ==
          doctest::Approx(0.025501630353475).epsilon(1e-9));
    // scipy oracle: t.cdf(2,100) - norm.cdf(2) = -0.0013559574173876
    CHECK(dist::student_t_cdf(2.0, 100) - dist::std_normal_cdf(2.0) ==
          doctest::Approx(-0.0013559574173876).epsilon(1e-7));
    // converges to the normal CDF as df grows
    CHECK(std::fabs(dist::student_t_cdf(2.0, 10000) - dist::std_normal_cdf(2.0)) < 5e-4);
    CHECK(std::fabs(dist::student_t_cdf(2.0, 100000) - dist::std_normal_cdf(2.0)) < 5e-5);
    CHECK_THROWS_AS(dist::student_t_cdf(1.0, 0), std::domain_error);

    // Monotone in t.
    double last = 0.0;
    for (double t = -6.0; t <= 6.0; t += 0.25) {
        const double p = dist::student_t_cdf(t, 5);
        CHECK(p >= last);
        last = p;
    }
}

TEST_CASE("chi_square_cdf closed forms") {
    CHECK(dist::chi_square_cdf(0.0, 3) == doctest::Approx(0.0));
    // df=2 is Exponential(1/2): median at 2 ln 2
    CHECK(dist::chi_square_cdf(2.0 * std::log(2.0), 2) == doctest::Approx(0.5).epsilon(1e-11));
    // df=1: P(chi2 <= 1) = 2 Phi(1) - 1
    CHECK(dist::chi_square_cdf(1.0, 1) ==
          doctest::Approx(2.0 * dist::std_normal_cdf(1.0) - 1.0).epsilon(1e-10));
    // scipy.stats.chi2.cdf spot values
    CHECK(dist::chi_square_cdf(3.2, 7) == doctest::Approx(0.134095258263902).epsilon(1e-10));
    CHECK(dist::chi_square_cdf(42.5, 30) == doctest::Approx(0.935191896657461).epsilon(1e-10));
    CHECK_THROWS_AS(dist::chi_square_cdf(-0.5, 3), std::domain_error);
}

TEST_CASE("std_normal_quantile inverts the CDF") {
    for (double p : {1e-7, 1e-4, 0.01, 0.3, 0.5, 0.9, 0.975, 0.999, 1.0 - 1e-7}) {
        const double z = dist::std_normal_quantile(p);
        CHECK(dist::std_normal_cdf(z) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(dist::std_normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(dist::std_normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(dist::std_normal_quantile(1.0), std::domain_error);
}

TEST_CASE("sample_moments hand-computed values") {
    SUBCASE("symmetric set") {
        const std::vector<double> values = {-1.0, 0.0, 1.0};
        const auto m = dist::sample_moments(values);
        CHECK(m.mean == doctest::Approx(0.0));
        CHECK(m.skewness.has_value());
        CHECK(*m.skewness == doctest::Approx(0.0));
        CHECK(!m.excess_kurtosis.has_value());  // needs n >= 4
    }
    SUBCASE("hand evaluation with n-1 sd") {
        const std::vector<double> values = {0.0, 0.0, 0.0, 1.0};
        const auto m = dist::sample_moments(values);
        CHECK(m.mean == doctest::Approx(0.25));
        CHECK(m.sd == doctest::Approx(0.5));
        CHECK(m.variance == doctest::Approx(0.25));
        CHECK(*m.skewness == doctest::Approx(0.75).epsilon(1e-12));
        // (1/4)*(3*0.25^4 + 0.75^4)/0.5^4 - 3 = 1.3125 - 3
        CHECK(*m.excess_kurtosis == doctest::Approx(-1.6875).epsilon(1e-12));
    }
    SUBCASE("n convention divides by n instead") {
        const std::vector<double> values = {0.0, 0.0, 0.0, 1.0};
        const auto m = dist::sample_moments(values, dist::SdConvention::N);
        CHECK(m.variance == doctest::Approx(0.75 / 4.0));
    }
    SUBCASE("large normal sample has vanishing skewness and excess kurtosis") {
        RngStream rng(5, 0);
        std::vector<double> values(1000000);
        for (auto& v : values) v = rng.normal();
        const auto m = dist::sample_moments(values);
        CHECK(std::fabs(*m.skewness) < 0.01);
        CHECK(std::fabs(*m.excess_kurtosis) < 0.01);
    }
    SUBCASE("degenerate pool flags moments undefined, not NaN") {
        const std::vector<double> values = {2.0, 2.0, 2.0, 2.0};
        const auto m = dist::sample_moments(values);
        CHECK(m.sd == 0.0);
        CHECK(!m.skewness.has_value());
        CHECK(!m.excess_kurtosis.has_value());
    }
    SUBCASE("too few values") {
        const std::vector<double> values = {1.0};
        CHECK_THROWS_AS(dist::sample_moments(values), InsufficientReplicationError);
    }
}

TEST_CASE("sample_moments shift and scale invariances") {
    RngStream rng(6, 0);
    std::vector<double> values(200);
    for (auto& v : values) v = rng.gamma(2.0);
    const auto base = dist::sample_moments(values);

    std::vector<double> shifted = values;
    for (auto& v : shifted) v += 17.5;
    const auto ms = dist::sample_moments(shifted);
    CHECK(ms.mean == doctest::Approx(base.mean + 17.5).epsilon(1e-12));
    CHECK(ms.sd == doctest::Approx(base.sd).epsilon(1e-10));
    CHECK(*ms.skewness == doctest::Approx(*base.skewness).epsilon(1e-9));
    CHECK(*ms.excess_kurtosis == doctest::Approx(*base.excess_kurtosis).epsilon(1e-9));

    std::vector<double> scaled = values;
    for (auto& v : scaled) v *= 3.0;
    const auto mk = dist::sample_moments(scaled);
    CHECK(mk.sd == doctest::Approx(3.0 * base.sd).epsilon(1e-12));
    CHECK(*mk.skewness == doctest::Approx(*base.skewness).epsilon(1e-12));
    CHECK(*mk.excess_kurtosis == doctest::Approx(*base.excess_kurtosis).epsilon(1e-12));
}

TEST_CASE("skew normal skewness formula") {
    CHECK(dist::skew_normal_skewness(0.0) == doctest::Approx(0.0));
    // direct evaluation with delta = 1/sqrt(2)
    CHECK(dist::skew_normal_skewness(1.0) ==
          doctest::Approx(0.13694876731165253).epsilon(1e-12));
    // odd function
    CHECK(dist::skew_normal_skewness(-1.0) ==
          doctest::Approx(-dist::skew_normal_skewness(1.0)).epsilon(1e-14));
    // delta -> 1 limit
    CHECK(dist::skew_normal_skewness(1e9) ==
          doctest::Approx(dist::kMaxSkewNormalSkewness).epsilon(1e-9));
    // strictly inside the open range away from the limit
    CHECK(std::fabs(dist::skew_normal_skewness(50.0)) < dist::kMaxSkewNormalSkewness);
}

TEST_CASE("skewness_to_alpha inverts the forward formula") {
    CHECK(dist::skewness_to_alpha(0.0) == doctest::Approx(0.0));
    CHECK(dist::skewness_to_alpha(0.13694876731165253) == doctest::Approx(1.0).epsilon(1e-6));
    for (double gamma : {-0.9, -0.5, -0.1370, 0.05, 0.5, 0.9, 0.99, 0.9952}) {
        const double alpha = dist::skewness_to_alpha(gamma);
        CHECK(dist::skew_normal_skewness(alpha) == doctest::Approx(gamma).epsilon(1e-8));
        CHECK((gamma > 0) == (alpha > 0));
    }
    CHECK_THROWS_AS(dist::skewness_to_alpha(0.99528), UnattainableShapeError);
    CHECK_THROWS_AS(dist::skewness_to_alpha(-1.5), UnattainableShapeError);
}

TEST_CASE("generalised normal excess kurtosis") {
    CHECK(dist::gen_normal_excess_kurtosis(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Laplace: Gamma(5)Gamma(1)/Gamma(3)^2 - 3 = 24/4 - 3
    CHECK(dist::gen_normal_excess_kurtosis(1.0) == doctest::Approx(3.0).epsilon(1e-12));
    // reflection identity makes beta = 6 exactly -1
    CHECK(dist::gen_normal_excess_kurtosis(6.0) == doctest::Approx(-1.0).epsilon(1e-12));
    // Gamma(10)Gamma(2)/Gamma(6)^2 - 3 = 25.2 - 3
    CHECK(dist::gen_normal_excess_kurtosis(0.5) == doctest::Approx(22.2).epsilon(1e-10));
    // uniform limit
    CHECK(dist::gen_normal_excess_kurtosis(1e6) == doctest::Approx(-1.2).epsilon(1e-4));
    CHECK(dist::gen_normal_excess_kurtosis(1e6) > -1.2);
    // strictly decreasing
    double last = dist::gen_normal_excess_kurtosis(0.2);
    for (double beta = 0.4; beta <= 30.0; beta += 0.2) {
        const double k = dist::gen_normal_excess_kurtosis(beta);
        CHECK(k < last);
        last = k;
    }
    CHECK_THROWS_AS(dist::gen_normal_excess_kurtosis(0.0), std::domain_error);
}

TEST_CASE("kurtosis_to_beta inverts the forward formula") {
    CHECK(dist::kurtosis_to_beta(0.0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(dist::kurtosis_to_beta(3.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(dist::kurtosis_to_beta(-1.0) == doctest::Approx(6.0).epsilon(1e-8));
    for (double kappa : {-1.1, -0.5, 0.3, 1.0, 5.0, 10.0, 100.0}) {
        const double beta = dist::kurtosis_to_beta(kappa);
        CHECK(dist::gen_normal_excess_kurtosis(beta) ==
              doctest::Approx(kappa).epsilon(1e-8));
    }
    CHECK_THROWS_AS(dist::kurtosis_to_beta(-1.2), UnattainableShapeError);
    CHECK_THROWS_AS(dist::kurtosis_to_beta(-2.0), UnattainableShapeError);
}

TEST_CASE("inversion pairs are mutual inverses over the working ranges") {
    for (double gamma = -0.9; gamma <= 0.9001; gamma += 0.1) {
        CHECK(dist::skew_normal_skewness(dist::skewness_to_alpha(gamma)) ==
              doctest::Approx(gamma).epsilon(1e-8));
    }
    for (double kappa = -1.0; kappa <= 10.0001; kappa += 0.5) {
        CHECK(dist::gen_normal_excess_kurtosis(dist::kurtosis_to_beta(kappa)) ==
              doctest::Approx(kappa).epsilon(1e-8));
    }
}

TEST_CASE("moment matching hits the target moments (quadrature oracle)") {
    SUBCASE("identity case") {
        const auto p = dist::moment_matched(0.0, 1.0, dist::SkewNormalParams{0, 1, 0});
        CHECK(p.location == doctest::Approx(0.0));
        CHECK(p.scale == doctest::Approx(1.0));
    }
    SUBCASE("skew normal, alpha = 1") {
        const auto p = dist::moment_matched(0.0, 1.0, dist::SkewNormalParams{0, 1, 1.0});
        // quadrature over a wide window as an independent check
        const double mass = simpson([&](double x) { return sn_pdf(p, x); }, -14, 14, 20000);
        const double mean = simpson([&](double x) { return x * sn_pdf(p, x); }, -14, 14, 20000);
        const double second =
            simpson([&](double x) { return x * x * sn_pdf(p, x); }, -14, 14, 20000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(second - mean * mean == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(dist::skew_normal_mean(p) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(dist::skew_normal_variance(p) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("generalised normal, beta = 1") {
        const auto p = dist::moment_matched(5.0, 2.0, dist::GenNormalParams{0, 1, 1.0});
        const double mean =
            simpson([&](double x) { return x * gn_pdf(p, x); }, 5.0 - 60, 5.0 + 60, 40000);
        const double second = simpson(
            [&](double x) { return (x - 5.0) * (x - 5.0) * gn_pdf(p, x); }, 5.0 - 60,
            5.0 + 60, 40000);
        CHECK(mean == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(second == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(p.location == doctest::Approx(5.0));
        CHECK(dist::gen_normal_variance(p) == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dist::moment_matched(0.0, 0.0, dist::SkewNormalParams{}),
                    std::domain_error);
    CHECK_THROWS_AS(dist::moment_matched(0.0, -1.0, dist::GenNormalParams{}),
                    std::domain_error);
}

TEST_CASE("skew normal sampler moments converge to the analytic values") {
    const int n = 1000000;
    SUBCASE("alpha = 0 reduces to normal") {
        RngStream rng(7, 1);
        dist::SkewNormalParams p{0, 1, 0};
        const auto values = dist::sample_skew_normal(p, n, rng);
        const auto m = dist::sample_moments(values);
        CHECK(std::fabs(*m.skewness) < 0.01);
    }
    SUBCASE("alpha = 1") {
        RngStream rng(7, 2);
        dist::SkewNormalParams p{0, 1, 1.0};
        const auto values = dist::sample_skew_normal(p, n, rng);
        const auto m = dist::sample_moments(values);
        CHECK(std::fabs(*m.skewness - 0.1370) < 0.01);
        CHECK(m.mean == doctest::Approx(dist::skew_normal_mean(p)).epsilon(0.01));
    }
}

TEST_CASE("generalised normal sampler moments converge") {
    const int n = 1000000;
    SUBCASE("beta = 2 reduces to normal") {
        RngStream rng(8, 1);
        dist::GenNormalParams p{0, std::sqrt(2.0), 2.0};  // variance 1 at scale sqrt(2)
        const auto values = dist::sample_gen_normal(p, n, rng);
        const auto m = dist::sample_moments(values);
        CHECK(std::fabs(*m.excess_kurtosis) < 0.05);
        CHECK(m.variance == doctest::Approx(dist::gen_normal_variance(p)).epsilon(0.01));
    }
    SUBCASE("beta = 1 is Laplace with excess kurtosis 3") {
        RngStream rng(8, 2);
        dist::GenNormalParams p{0, 1, 1.0};
        const auto values = dist::sample_gen_normal(p, n, rng);
        const auto m = dist::sample_moments(values);
        CHECK(std::fabs(*m.excess_kurtosis - 3.0) < 0.2);
    }
}

TEST_CASE("sampler determinism: equal streams give bit-identical sequences") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    dist::SkewNormalParams sn{1.0, 2.0, -0.7};
    dist::GenNormalParams gn{-1.0, 0.5, 1.3};
    const auto sa = dist::sample_skew_normal(sn, 50, a);
    const auto sb = dist::sample_skew_normal(sn, 50, b);
    CHECK(sa == sb);
    const auto ga = dist::sample_gen_normal(gn, 50, a);
    const auto gb = dist::sample_gen_normal(gn, 50, b);
    CHECK(ga == gb);

    RngStream c(42, 8);  // different stream differs
    const auto sc = dist::sample_skew_normal(sn, 50, c);
    CHECK(sa != sc);
}

TEST_CASE("empirical_cdf continuity-corrected rank") {
    std::vector<double> reference(999);
    for (std::size_t i = 0; i < reference.size(); ++i) {
        reference[i] = static_cast<double>(i + 1);
    }
    CHECK(dist::empirical_cdf(reference, 0.0) == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK(dist::empirical_cdf(reference, 1e6) ==
          doctest::Approx(999.5 / 1000.0).epsilon(1e-12));
    // observed equal to the median of an odd-sized reference
    CHECK(dist::empirical_cdf(reference, 500.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist::empirical_cdf(reference, 500.5) > 0.0);
    CHECK(dist::empirical_cdf(reference, 500.5) < 1.0);
    CHECK_THROWS_AS(dist::empirical_cdf(std::vector<double>{}, 1.0), std::domain_error);
}

TEST_CASE("empirical_cdf is uniform under the probability integral transform") {
    // reference and observed from the same distribution -> P uniform(0,1)
    RngStream rng(9, 0);
    std::vector<double> ps;
    std::vector<double> reference(199);
    for (int rep = 0; rep < 400; ++rep) {
        for (auto& v : reference) v = rng.normal();
        ps.push_back(dist::empirical_cdf(reference, rng.normal()));
    }
    const double p = test_helpers::ks_p_value(ps, [](double x) {
        return std::clamp(x, 0.0, 1.0);
    });
    CHECK(p > 0.01);
}
