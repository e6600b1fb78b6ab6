#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stochdiag/rng.hpp"

namespace stochdiag::dist {

// Skew normal with location xi, scale omega, shape alpha. alpha = 0 is the
// plain normal.
struct SkewNormalParams {
    double location = 0.0;
    double scale = 1.0;
    double alpha = 0.0;
};

// Generalised (exponential-power) normal with shape beta. beta = 2 is the
// plain normal, beta = 1 the Laplace.
struct GenNormalParams {
    double location = 0.0;
    double scale = 1.0;
    double beta = 2.0;
};

// Which denominator the sample standard deviation uses. Everything downstream
// defaults to the unbiased n-1 form.
enum class SdConvention { NMinusOne, N };

struct SampleMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double variance = 0.0;
    // Undefined (not NaN) when the pool is too small or degenerate:
    // skewness needs n >= 3 and sd > 0, excess kurtosis n >= 4 and sd > 0.
    std::optional<double> skewness;
    std::optional<double> excess_kurtosis;
};

// Largest skewness magnitude the skew-normal family can represent
// (the alpha -> +inf limit).
inline constexpr double kMaxSkewNormalSkewness = 0.99527174643115604;

// Infimum of the generalised-normal excess kurtosis (the beta -> inf,
// i.e. uniform, limit).
inline constexpr double kMinGenNormalExcessKurtosis = -1.2;

double std_normal_cdf(double z);
double std_normal_quantile(double p);
double student_t_cdf(double t, int df);
double chi_square_cdf(double x, int df);

SampleMoments sample_moments(std::span<const double> values,
                             SdConvention convention = SdConvention::NMinusOne);

// Skewness of the skew normal as a function of alpha; odd, bounded by
// +-kMaxSkewNormalSkewness.
double skew_normal_skewness(double alpha);

// Numerical inverse of skew_normal_skewness. Throws UnattainableShapeError
// for |gamma| >= kMaxSkewNormalSkewness.
double skewness_to_alpha(double gamma);

// Excess kurtosis of the generalised normal; strictly decreasing in beta,
// 0 at beta = 2, -> -1.2 as beta -> inf.
double gen_normal_excess_kurtosis(double beta);

// Numerical inverse of gen_normal_excess_kurtosis. Throws
// UnattainableShapeError for kappa <= -1.2.
double kurtosis_to_beta(double kappa);

// Analytic moments, used for moment matching.
double skew_normal_mean(const SkewNormalParams& p);
double skew_normal_variance(const SkewNormalParams& p);
double gen_normal_variance(const GenNormalParams& p);

// Single draws. Skew normal uses the two-normal representation
// delta*|z0| + sqrt(1-delta^2)*z1; generalised normal maps a gamma variate
// through the power transform. Both are exact (no tuning constants).
double skew_normal_draw(const SkewNormalParams& p, RngStream& rng);
double gen_normal_draw(const GenNormalParams& p, RngStream& rng);

std::vector<double> sample_skew_normal(const SkewNormalParams& p, std::size_t n,
                                       RngStream& rng);
std::vector<double> sample_gen_normal(const GenNormalParams& p, std::size_t n,
                                      RngStream& rng);

// Rescales location/scale so the analytic mean and sd hit the targets while
// the shape parameter stays fixed.
SkewNormalParams moment_matched(double target_mean, double target_sd,
                                const SkewNormalParams& shape);
GenNormalParams moment_matched(double target_mean, double target_sd,
                               const GenNormalParams& shape);

// Continuity-corrected empirical CDF position of `observed` within
// `reference`: (#below + 0.5*#equal + 0.5) / (n + 1). Always strictly inside
// (0,1), so finite references never saturate the unexpectedness at +-1.
double empirical_cdf(std::span<const double> reference, double observed);

}  // namespace stochdiag::dist
