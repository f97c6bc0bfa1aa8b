#pragma once

// Small, dependency-free statistics toolkit: special functions needed for
// t-test and chi-square tail probabilities, plus the paired-sample test the
// evaluation pipeline reports.

#include <cstddef>
#include <vector>

namespace srl::stats {

// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
// Evaluated via the standard continued fraction with modified Lentz
// iteration; accurate to ~1e-12 relative over the ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

// Regularized lower/upper incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x),
// for a > 0, x >= 0. Series expansion for x < a + 1, continued fraction
// otherwise.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of
// freedom: probability that a chi-square variate exceeds x.
double chi_square_sf(double x, int df);

struct TTestResult {
    double t = 0.0;        // paired t statistic (mean diff / stderr)
    double p = 1.0;        // two-sided p-value
    int df = 0;            // n - 1
    bool significant = false;  // p <= alpha
    bool degenerate = false;   // zero-variance differences or n < 2
};

// Paired two-sided t-test between equal-length samples. Zero-variance
// differences (all pairs move identically, including all-equal) yield
// p = 1 with the degenerate flag set rather than a division by zero.
// Throws ConfigError on mismatched or too-short inputs.
TTestResult paired_ttest(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         double alpha = 0.05);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;   // sample stddev (n - 1 denominator); 0 when n < 2
    bool degenerate = false;  // n < 2: stddev undefined
};

Summary summarize(const std::vector<double>& xs);

}  // namespace srl::stats
