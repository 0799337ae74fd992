#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "melcmp/common.hpp"

namespace melcmp {

// ---------------------------------------------------------------- normal

/// Standard normal CDF via the complementary error function.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Inverse standard normal CDF. Acklam's rational approximation with one
/// Halley refinement step against erfc, good to machine precision.
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw DomainError("normal_quantile: p must be in (0, 1)");
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// ---------------------------------------------------------------- beta / t

namespace detail {

/// Continued-fraction factor of the incomplete beta (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("beta_continued_fraction: no convergence");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw DomainError("regularized_incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0)
        throw DomainError("regularized_incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Student-t CDF with `df` degrees of freedom, via
/// I_z(df/2, 1/2) with z = df/(df + x^2).
inline double student_t_cdf(double x, unsigned df) {
    if (df == 0) throw DomainError("student_t_cdf: df must be >= 1");
    if (x == 0.0) return 0.5;
    const double nu = static_cast<double>(df);
    const double z = nu / (nu + x * x);
    const double half_tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, z);
    return x > 0.0 ? 1.0 - half_tail : half_tail;
}

// ---------------------------------------------------------------- paired t

/// Matched observation pairs for one comparison: a_values[i] and
/// b_values[i] measure the same cell under the two conditions.
struct PairedSample {
    std::vector<std::string> labels;
    std::vector<double> a_values;
    std::vector<double> b_values;
};

struct PairedTestResult {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double sd_diff = 0.0;
    double t_statistic = 0.0;
    unsigned degrees_of_freedom = 0;
    double p_value = 1.0;
    double shapiro_w = 0.0;
    double shapiro_p = 0.0;
};

/// d_i = a_i - b_i in label order.
inline std::vector<double> paired_differences(const PairedSample& sample) {
    if (sample.a_values.size() != sample.b_values.size())
        throw ShapeError("paired_differences: unequal lengths");
    if (sample.a_values.size() < 3)
        throw DomainError("paired_differences: need at least 3 pairs");
    std::vector<double> d(sample.a_values.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = sample.a_values[i] - sample.b_values[i];
        if (!std::isfinite(d[i]))
            throw DomainError("paired_differences: non-finite value at index " +
                              std::to_string(i));
    }
    return d;
}

struct TTestOutcome {
    double t = 0.0;
    unsigned df = 0;
    double p = 1.0;
    double mean = 0.0;
    double sd = 0.0;  // n-1 denominator
};

/// Two-sided one-sample t-test of zero mean: t = mean / (sd / sqrt(n)).
inline TTestOutcome paired_t_test(const std::vector<double>& d) {
    const std::size_t n = d.size();
    if (n < 2) throw DomainError("paired_t_test: need at least 2 differences");
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd <= 0.0)
        throw DegenerateError("paired_t_test: zero variance in differences");
    TTestOutcome out;
    out.mean = mean;
    out.sd = sd;
    out.df = static_cast<unsigned>(n - 1);
    out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    out.p = 2.0 * student_t_cdf(-std::fabs(out.t), out.df);
    return out;
}

// ---------------------------------------------------------------- shapiro

struct ShapiroResult {
    double w = 0.0;
    double p = 0.0;
};

/// Shapiro-Wilk normality test, Royston's 1995 approximation (AS R94,
/// uncensored case): coefficients from Blom-type expected normal order
/// statistics with polynomial corrections, p from the normalized
/// log(1 - W) transform for the sample size.
inline ShapiroResult shapiro_wilk(const std::vector<double>& sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000)
        throw DomainError("shapiro_wilk: n must be in [3, 5000], got " +
                          std::to_string(n));
    std::vector<double> x = sample;
    std::sort(x.begin(), x.end());
    const double range = x[n - 1] - x[0];
    if (range < 1e-300)
        throw DegenerateError("shapiro_wilk: all values identical");

    static constexpr double kC1[6] = {0.0, 0.221157, -0.147981, -2.071190,
                                      4.434685, -2.706056};
    static constexpr double kC2[6] = {0.0, 0.042981, -0.293762, -1.752461,
                                      5.682633, -3.582633};
    static constexpr double kC3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr double kC4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double kC5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double kC6[3] = {-0.4803, -0.082676, 0.0030302};

    auto poly = [](const double* coef, int order, double v) {
        double acc = 0.0;
        for (int i = order - 1; i >= 0; --i) acc = acc * v + coef[i];
        return acc;
    };

    const double an = static_cast<double>(n);
    const std::size_t n2 = n / 2;
    std::vector<double> a(n2, 0.0);
    if (n == 3) {
        a[0] = std::numbers::sqrt2 / 2.0;
    } else {
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= n2; ++i) {
            a[i - 1] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
            summ2 += a[i - 1] * a[i - 1];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(kC1, 6, rsn) - a[0] / ssumm2;
        std::size_t i1;
        double fac;
        if (n > 5) {
            i1 = 3;
            const double a2 = -a[1] / ssumm2 + poly(kC2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[0] = a1;
            a[1] = a2;
        } else {
            i1 = 2;
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
            a[0] = a1;
        }
        for (std::size_t i = i1; i <= n2; ++i) a[i - 1] = -a[i - 1] / fac;
    }

    // W as the squared correlation between the range-scaled order
    // statistics and the antisymmetric coefficient vector.
    double sx = 0.0, sa = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t j = n + 1 - i;
        sx += x[i - 1] / range;
        if (i != j) sa += (i < j ? -1.0 : 1.0) * a[std::min(i, j) - 1];
    }
    sx /= an;
    sa /= an;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t j = n + 1 - i;
        const double asa =
            (i == j ? 0.0 : (i < j ? -1.0 : 1.0) * a[std::min(i, j) - 1]) - sa;
        const double xsx = x[i - 1] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);

    ShapiroResult out;
    out.w = 1.0 - w1;
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274403;    // 6/pi
        constexpr double stqr = 1.04719755119659775;   // asin(sqrt(3/4))
        out.p = std::clamp(pi6 * (std::asin(std::sqrt(out.w)) - stqr), 0.0, 1.0);
        return out;
    }
    if (w1 <= 0.0) {  // W rounded to 1: perfectly linear Q-Q relation
        out.p = 1.0;
        return out;
    }
    const double y = std::log(w1);
    if (n <= 11) {
        const double gamma = -2.273 + 0.459 * an;
        if (y >= gamma) {
            out.p = std::numeric_limits<double>::min();
            return out;
        }
        const double yg = -std::log(gamma - y);
        const double m = poly(kC3, 4, an);
        const double s = std::exp(poly(kC4, 4, an));
        out.p = 1.0 - normal_cdf((yg - m) / s);
    } else {
        const double lx = std::log(an);
        const double m = poly(kC5, 4, lx);
        const double s = std::exp(poly(kC6, 3, lx));
        out.p = 1.0 - normal_cdf((y - m) / s);
    }
    return out;
}

// ---------------------------------------------------------------- q-q data

struct QqPoint {
    double theoretical = 0.0;
    double observed = 0.0;
};

/// Ordered values paired with normal quantiles at Blom plotting
/// positions (i - 0.375)/(n + 0.25).
inline std::vector<QqPoint> qq_data(const std::vector<double>& d) {
    const std::size_t n = d.size();
    if (n < 2) throw DomainError("qq_data: need at least 2 values");
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    std::vector<QqPoint> out(n);
    for (std::size_t i = 1; i <= n; ++i) {
        out[i - 1].theoretical =
            normal_quantile((static_cast<double>(i) - 0.375) /
                            (static_cast<double>(n) + 0.25));
        out[i - 1].observed = sorted[i - 1];
    }
    return out;
}

/// Full comparison protocol over one paired sample: differences,
/// Shapiro-Wilk on the differences, then the two-sided paired t-test.
inline PairedTestResult paired_compare(const PairedSample& sample) {
    const std::vector<double> d = paired_differences(sample);
    const ShapiroResult sw = shapiro_wilk(d);
    const TTestOutcome tt = paired_t_test(d);
    PairedTestResult res;
    res.n = d.size();
    res.mean_diff = tt.mean;
    res.sd_diff = tt.sd;
    res.t_statistic = tt.t;
    res.degrees_of_freedom = tt.df;
    res.p_value = tt.p;
    res.shapiro_w = sw.w;
    res.shapiro_p = sw.p;
    return res;
}

}  // namespace melcmp
