#include "srl/stats.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "srl/common.hpp"

namespace srl::stats {

namespace {

// Continued-fraction core for the incomplete beta function, evaluated with
// the modified Lentz algorithm. Converges quickly when x < (a+1)/(a+b+2);
// the public wrapper applies the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to
// stay in that region.
double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 400;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        // Even step.
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

// Lower incomplete gamma P(a,x) by series expansion (for x < a + 1).
double gamma_p_series(double a, double x) {
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 1000;
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma Q(a,x) by continued fraction (for x >= a + 1),
// modified Lentz again.
double gamma_q_cf(double a, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 1000;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ConfigError("incomplete beta requires a > 0 and b > 0");
    if (!(x >= 0.0 && x <= 1.0))
        throw ConfigError("incomplete beta requires x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("incomplete gamma requires a > 0");
    if (!(x >= 0.0)) throw ConfigError("incomplete gamma requires x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("incomplete gamma requires a > 0");
    if (!(x >= 0.0)) throw ConfigError("incomplete gamma requires x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int df) {
    if (df <= 0) throw ConfigError("chi-square requires df >= 1");
    if (!(x >= 0.0)) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

TTestResult paired_ttest(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         double alpha) {
    if (xs.size() != ys.size())
        throw ConfigError("paired t-test requires equal-length samples (" +
                          std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
    TTestResult r;
    const std::size_t n = xs.size();
    if (n < 2) {
        r.degenerate = true;
        r.p = 1.0;
        return r;
    }
    r.df = static_cast<int>(n - 1);

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xs[i] - ys[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (xs[i] - ys[i]) - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(n - 1);
    if (var <= 0.0) {
        // All pairs differ by the same amount; the statistic is undefined.
        r.degenerate = true;
        r.p = 1.0;
        r.t = 0.0;
        return r;
    }
    r.t = mean / std::sqrt(var / static_cast<double>(n));
    const double df = static_cast<double>(r.df);
    r.p = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + r.t * r.t));
    r.significant = r.p <= alpha;
    return r;
}

Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.n = xs.size();
    if (s.n == 0) {
        s.degenerate = true;
        return s;
    }
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(s.n);
    s.mean = mean;
    if (s.n < 2) {
        s.degenerate = true;
        return s;
    }
    double ss = 0.0;
    for (double v : xs) {
        const double d = v - mean;
        ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    return s;
}

}  // namespace srl::stats
