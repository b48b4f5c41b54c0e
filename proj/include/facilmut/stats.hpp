#pragma once

#include <span>
#include <string_view>

namespace facilmut {

/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees
/// of freedom (df may be fractional).
double student_t_two_sided_p(double t, double df);

struct WelchResult {
    double t = 0.0;
    double degrees_of_freedom = 0.0;
    double p_two_sided = 1.0;
    /// Both samples have zero variance; p is 1 for equal means and 0 otherwise.
    bool degenerate = false;
};

/// Welch's unequal-variance two-sample t-test. Needs at least two values per
/// sample (std::invalid_argument otherwise).
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct EffectSize {
    double d = 0.0;
    std::string_view band = "S";
    /// Zero pooled variance.
    bool degenerate = false;
};

/// Cohen's d with (n-1)-weighted pooled variance and S/M/L banding.
EffectSize cohens_d(std::span<const double> a, std::span<const double> b);

/// "S" below 0.5, "M" below 0.8, "L" otherwise (on |d|).
std::string_view effect_band(double d);

/// "****" p < 1e-4, "***" p <= 1e-3, "**" p <= 1e-2, "*" p < 0.05, else "".
std::string_view significance_stars(double p);

}  // namespace facilmut
