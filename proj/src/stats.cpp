#include "facilmut/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace facilmut {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            return h;
        }
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_variance(std::span<const double> v, double m) {
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return ss / static_cast<double>(v.size() - 1);
}

void require_two(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw std::invalid_argument("each sample needs at least two values");
    }
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) {
        throw std::invalid_argument("incomplete beta needs a > 0 and b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("incomplete beta needs x in [0,1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) {
        throw std::invalid_argument("degrees of freedom must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    require_two(a, b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = sample_variance(a, ma) / na;
    const double vb = sample_variance(b, mb) / nb;
    const double se2 = va + vb;

    WelchResult r;
    if (se2 == 0.0) {
        r.degenerate = true;
        r.degrees_of_freedom = na + nb - 2.0;
        if (ma == mb) {
            r.t = 0.0;
            r.p_two_sided = 1.0;
        } else {
            r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_two_sided = 0.0;
        }
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.degrees_of_freedom = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_two_sided = student_t_two_sided_p(r.t, r.degrees_of_freedom);
    return r;
}

std::string_view effect_band(double d) {
    const double m = std::abs(d);
    if (m < 0.5) {
        return "S";
    }
    return m < 0.8 ? "M" : "L";
}

EffectSize cohens_d(std::span<const double> a, std::span<const double> b) {
    require_two(a, b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double pooled =
        ((na - 1.0) * sample_variance(a, ma) + (nb - 1.0) * sample_variance(b, mb)) / (na + nb - 2.0);

    EffectSize e;
    if (pooled == 0.0) {
        e.degenerate = true;
        e.d = ma == mb ? 0.0 : (ma > mb ? 1.0 : -1.0) * std::numeric_limits<double>::infinity();
    } else {
        e.d = (ma - mb) / std::sqrt(pooled);
    }
    e.band = effect_band(e.d);
    return e;
}

std::string_view significance_stars(double p) {
    if (p < 1e-4) {
        return "****";
    }
    if (p <= 1e-3) {
        return "***";
    }
    if (p <= 1e-2) {
        return "**";
    }
    if (p < 0.05) {
        return "*";
    }
    return "";
}

}  // namespace facilmut
