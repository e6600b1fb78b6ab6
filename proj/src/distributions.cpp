#include "stochdiag/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stochdiag/errors.hpp"
#include "stochdiag/special_functions.hpp"

namespace stochdiag::dist {

namespace {

constexpr double kPi = 3.14159265358979323846;

double require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::domain_error(std::string(what) + ": non-finite input");
    }
    return x;
}

// Skewness of the standard skew normal expressed in delta = alpha/sqrt(1+a^2).
double skewness_from_delta(double delta) {
    const double m = delta * std::sqrt(2.0 / kPi);
    const double v = 1.0 - 2.0 * delta * delta / kPi;
    return 0.5 * (4.0 - kPi) * m * m * m / std::pow(v, 1.5);
}

}  // namespace

double std_normal_cdf(double z) {
    require_finite(z, "std_normal_cdf");
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("std_normal_quantile: need p in (0,1)");
    }
    // Hastings initial guess (Abramowitz & Stegun 26.2.22), then Newton with
    // the erfc-based CDF; three steps reach machine precision.
    const double q = p < 0.5 ? p : 1.0 - p;
    const double t = std::sqrt(-2.0 * std::log(q));
    double z = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
    if (p < 0.5) z = -z;
    for (int i = 0; i < 4; ++i) {
        const double err = std_normal_cdf(z) - p;
        const double step = err / sf::std_normal_pdf(z);
        if (!std::isfinite(step)) break;
        z -= step;
    }
    return z;
}

double student_t_cdf(double t, int df) {
    require_finite(t, "student_t_cdf");
    if (df < 1) {
        throw std::domain_error("student_t_cdf: need df >= 1");
    }
    const double v = static_cast<double>(df);
    const double x = v / (t * t + v);
    const double half_tail = 0.5 * sf::incomplete_beta_regularized(x, 0.5 * v, 0.5);
    return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double chi_square_cdf(double x, int df) {
    if (df < 1) {
        throw std::domain_error("chi_square_cdf: need df >= 1");
    }
    if (!(x >= 0.0)) {
        throw std::domain_error("chi_square_cdf: need x >= 0");
    }
    return sf::lower_incomplete_gamma_regularized(0.5 * df, 0.5 * x);
}

SampleMoments sample_moments(std::span<const double> values,
                             SdConvention convention) {
    const std::size_t n = values.size();
    if (n < 2) {
        throw InsufficientReplicationError(
            "sample_moments: need at least 2 values");
    }
    SampleMoments m;
    m.n = n;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double nn = static_cast<double>(n);
    const double denom = convention == SdConvention::NMinusOne ? nn - 1.0 : nn;
    m.variance = m2 / denom;
    m.sd = std::sqrt(m.variance);
    if (m.sd > 0.0) {
        // Uncorrected 1/n numerators over powers of the sample sd.
        if (n >= 3) m.skewness = (m3 / nn) / (m.sd * m.sd * m.sd);
        if (n >= 4) m.excess_kurtosis = (m4 / nn) / (m.variance * m.variance) - 3.0;
    }
    return m;
}

double skew_normal_skewness(double alpha) {
    require_finite(alpha, "skew_normal_skewness");
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    return skewness_from_delta(delta);
}

double skewness_to_alpha(double gamma) {
    require_finite(gamma, "skewness_to_alpha");
    if (std::fabs(gamma) >= kMaxSkewNormalSkewness) {
        throw UnattainableShapeError(
            "skewness_to_alpha: |skewness| must be below 0.99527");
    }
    if (gamma == 0.0) return 0.0;
    // Bisect in delta: the map delta -> skewness is strictly increasing on
    // (-1,1) and covers the whole attainable range, which a fixed alpha
    // bracket does not.
    const double target = std::fabs(gamma);
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (skewness_from_delta(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double delta = 0.5 * (lo + hi);
    const double alpha = delta / std::sqrt((1.0 - delta) * (1.0 + delta));
    return gamma > 0.0 ? alpha : -alpha;
}

double gen_normal_excess_kurtosis(double beta) {
    if (!(beta > 0.0)) {
        throw std::domain_error("gen_normal_excess_kurtosis: need beta > 0");
    }
    const double log_ratio = sf::log_gamma(5.0 / beta) + sf::log_gamma(1.0 / beta) -
                             2.0 * sf::log_gamma(3.0 / beta);
    if (log_ratio > 700.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::exp(log_ratio) - 3.0;
}

double kurtosis_to_beta(double kappa) {
    require_finite(kappa, "kurtosis_to_beta");
    if (kappa <= kMinGenNormalExcessKurtosis) {
        throw UnattainableShapeError(
            "kurtosis_to_beta: excess kurtosis must exceed -1.2");
    }
    if (kappa == 0.0) return 2.0;
    // Expand the bracket beyond [0.1, 200] when needed; the kurtosis decays
    // to -1.2 only in the beta -> inf limit.
    double lo = 0.1;
    while (gen_normal_excess_kurtosis(lo) < kappa) {
        lo *= 0.25;
        if (lo < 1e-8) {
            throw UnattainableShapeError("kurtosis_to_beta: kurtosis too large");
        }
    }
    double hi = 200.0;
    while (gen_normal_excess_kurtosis(hi) > kappa) {
        hi *= 2.0;
        if (hi > 1e12) {
            throw UnattainableShapeError(
                "kurtosis_to_beta: kurtosis too close to -1.2");
        }
    }
    double log_lo = std::log(lo);
    double log_hi = std::log(hi);
    for (int i = 0; i < 200 && log_hi - log_lo > 1e-14; ++i) {
        const double mid = 0.5 * (log_lo + log_hi);
        if (gen_normal_excess_kurtosis(std::exp(mid)) > kappa) {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    return std::exp(0.5 * (log_lo + log_hi));
}

double skew_normal_mean(const SkewNormalParams& p) {
    const double delta = p.alpha / std::sqrt(1.0 + p.alpha * p.alpha);
    return p.location + p.scale * delta * std::sqrt(2.0 / kPi);
}

double skew_normal_variance(const SkewNormalParams& p) {
    const double delta = p.alpha / std::sqrt(1.0 + p.alpha * p.alpha);
    return p.scale * p.scale * (1.0 - 2.0 * delta * delta / kPi);
}

double gen_normal_variance(const GenNormalParams& p) {
    return p.scale * p.scale *
           std::exp(sf::log_gamma(3.0 / p.beta) - sf::log_gamma(1.0 / p.beta));
}

double skew_normal_draw(const SkewNormalParams& p, RngStream& rng) {
    const double delta = p.alpha / std::sqrt(1.0 + p.alpha * p.alpha);
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double z = delta * std::fabs(z0) + std::sqrt(1.0 - delta * delta) * z1;
    return p.location + p.scale * z;
}

double gen_normal_draw(const GenNormalParams& p, RngStream& rng) {
    // |X - mu|^beta / s^beta ~ Gamma(1/beta, 1), sign is symmetric.
    const double g = rng.gamma(1.0 / p.beta);
    const double magnitude = p.scale * std::pow(g, 1.0 / p.beta);
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    return p.location + sign * magnitude;
}

std::vector<double> sample_skew_normal(const SkewNormalParams& p, std::size_t n,
                                       RngStream& rng) {
    std::vector<double> out(n);
    for (auto& v : out) v = skew_normal_draw(p, rng);
    return out;
}

std::vector<double> sample_gen_normal(const GenNormalParams& p, std::size_t n,
                                      RngStream& rng) {
    std::vector<double> out(n);
    for (auto& v : out) v = gen_normal_draw(p, rng);
    return out;
}

SkewNormalParams moment_matched(double target_mean, double target_sd,
                                const SkewNormalParams& shape) {
    if (!(target_sd > 0.0)) {
        throw std::domain_error("moment_matched: need target sd > 0");
    }
    const double delta = shape.alpha / std::sqrt(1.0 + shape.alpha * shape.alpha);
    const double unit_sd = std::sqrt(1.0 - 2.0 * delta * delta / kPi);
    SkewNormalParams out;
    out.alpha = shape.alpha;
    out.scale = target_sd / unit_sd;
    out.location = target_mean - out.scale * delta * std::sqrt(2.0 / kPi);
    return out;
}

GenNormalParams moment_matched(double target_mean, double target_sd,
                               const GenNormalParams& shape) {
    if (!(target_sd > 0.0)) {
        throw std::domain_error("moment_matched: need target sd > 0");
    }
    GenNormalParams out;
    out.beta = shape.beta;
    out.scale = target_sd * std::exp(0.5 * (sf::log_gamma(1.0 / shape.beta) -
                                            sf::log_gamma(3.0 / shape.beta)));
    out.location = target_mean;
    return out;
}

double empirical_cdf(std::span<const double> reference, double observed) {
    if (reference.empty()) {
        throw std::domain_error("empirical_cdf: reference must be nonempty");
    }
    double below = 0.0;
    for (double r : reference) {
        if (r < observed) {
            below += 1.0;
        } else if (r == observed) {
            below += 0.5;
        }
    }
    return (below + 0.5) / (static_cast<double>(reference.size()) + 1.0);
}

}  // namespace stochdiag::dist
