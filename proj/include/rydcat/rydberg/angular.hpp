#pragma once

// Clebsch-Gordan, Wigner 3j and 6j symbols from the Racah formulas.
// Angular momenta are passed as doubles (half-integers allowed) and handled
// internally as twice their value. Small arguments use exact rational
// arithmetic, large ones log-factorials.

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <boost/multiprecision/cpp_int.hpp>

#include "../core/error.hpp"

namespace rydcat::rydberg {

namespace detail {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr int exact_limit = 200;  ///< largest factorial argument on the exact path

inline int twice(double j) {
    const double t = 2.0 * j;
    const long r = std::lround(t);
    if (std::abs(t - r) > 1e-9) throw ConfigError("angular momentum must be a multiple of 1/2");
    return static_cast<int>(r);
}

inline const BigInt& factorial(int n) {
    static const auto table = [] {
        std::vector<BigInt> f(exact_limit + 1);
        f[0] = 1;
        for (int i = 1; i <= exact_limit; ++i) f[i] = f[i - 1] * i;
        return f;
    }();
    return table.at(static_cast<std::size_t>(n));
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

inline bool triangle(int a, int b, int c) {
    return c >= std::abs(a - b) && c <= a + b && (a + b + c) % 2 == 0;
}

// Triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)! with doubled arguments.
inline Rational delta_exact(int a, int b, int c) {
    return Rational(factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2),
                    factorial((a + b + c) / 2 + 1));
}

inline double log_delta(int a, int b, int c) {
    return log_factorial((a + b - c) / 2) + log_factorial((a - b + c) / 2) + log_factorial((-a + b + c) / 2) -
           log_factorial((a + b + c) / 2 + 1);
}

/// sqrt(radicand) * sum, the shape of every Racah expression. Squared in
/// rational arithmetic first: the factors alone can underflow a double.
inline double sqrt_times(const Rational& radicand, const Rational& sum) {
    if (sum == 0) return 0.0;
    const double v = std::sqrt(Rational(radicand * sum * sum).convert_to<double>());
    return sum < 0 ? -v : v;
}

// 3j symbol with doubled arguments.
inline double wigner3j_2(int j1, int j2, int j3, int m1, int m2, int m3) {
    if (m1 + m2 + m3 != 0) return 0.0;
    if (!triangle(j1, j2, j3)) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
    if ((j1 + m1) % 2 || (j2 + m2) % 2 || (j3 + m3) % 2) return 0.0;

    const int kmin = std::max({0, (j2 - j3 - m1) / 2, (j1 - j3 + m2) / 2});
    const int kmax = std::min({(j1 + j2 - j3) / 2, (j1 - m1) / 2, (j2 + m2) / 2});
    if (kmin > kmax) return 0.0;
    const int top = (j1 + j2 + j3) / 2 + 1;
    const int phase = ((j1 - j2 - m3) / 2) % 2 == 0 ? 1 : -1;

    if (top <= exact_limit) {
        const Rational rad = delta_exact(j1, j2, j3) * Rational(factorial((j1 + m1) / 2) * factorial((j1 - m1) / 2) *
                                                                factorial((j2 + m2) / 2) * factorial((j2 - m2) / 2) *
                                                                factorial((j3 + m3) / 2) * factorial((j3 - m3) / 2));
        Rational sum = 0;
        for (int k = kmin; k <= kmax; ++k) {
            const BigInt den = factorial(k) * factorial((j1 + j2 - j3) / 2 - k) * factorial((j1 - m1) / 2 - k) *
                               factorial((j2 + m2) / 2 - k) * factorial((j3 - j2 + m1) / 2 + k) *
                               factorial((j3 - j1 - m2) / 2 + k);
            sum += Rational(k % 2 ? -1 : 1, den);
        }
        return phase * sqrt_times(rad, sum);
    }

    const double lr = 0.5 * (log_delta(j1, j2, j3) + log_factorial((j1 + m1) / 2) + log_factorial((j1 - m1) / 2) +
                             log_factorial((j2 + m2) / 2) + log_factorial((j2 - m2) / 2) +
                             log_factorial((j3 + m3) / 2) + log_factorial((j3 - m3) / 2));
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double ld = log_factorial(k) + log_factorial((j1 + j2 - j3) / 2 - k) + log_factorial((j1 - m1) / 2 - k) +
                          log_factorial((j2 + m2) / 2 - k) + log_factorial((j3 - j2 + m1) / 2 + k) +
                          log_factorial((j3 - j1 - m2) / 2 + k);
        sum += (k % 2 ? -1.0 : 1.0) * std::exp(lr - ld);
    }
    return phase * sum;
}

// 6j symbol with doubled arguments.
inline double wigner6j_2(int j1, int j2, int j3, int j4, int j5, int j6) {
    if (!triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) || !triangle(j4, j5, j3)) return 0.0;
    const int a1 = (j1 + j2 + j3) / 2, a2 = (j1 + j5 + j6) / 2, a3 = (j4 + j2 + j6) / 2, a4 = (j4 + j5 + j3) / 2;
    const int b1 = (j1 + j2 + j4 + j5) / 2, b2 = (j2 + j3 + j5 + j6) / 2, b3 = (j3 + j1 + j6 + j4) / 2;
    const int kmin = std::max({a1, a2, a3, a4});
    const int kmax = std::min({b1, b2, b3});
    if (kmin > kmax) return 0.0;

    if (kmax + 1 <= exact_limit) {
        const Rational rad = delta_exact(j1, j2, j3) * delta_exact(j1, j5, j6) * delta_exact(j4, j2, j6) *
                             delta_exact(j4, j5, j3);
        Rational sum = 0;
        for (int k = kmin; k <= kmax; ++k) {
            const BigInt den = factorial(k - a1) * factorial(k - a2) * factorial(k - a3) * factorial(k - a4) *
                               factorial(b1 - k) * factorial(b2 - k) * factorial(b3 - k);
            sum += Rational(BigInt(k % 2 ? -1 : 1) * factorial(k + 1), den);
        }
        return sqrt_times(rad, sum);
    }

    const double lr = 0.5 * (log_delta(j1, j2, j3) + log_delta(j1, j5, j6) + log_delta(j4, j2, j6) + log_delta(j4, j5, j3));
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double ld = log_factorial(k - a1) + log_factorial(k - a2) + log_factorial(k - a3) + log_factorial(k - a4) +
                          log_factorial(b1 - k) + log_factorial(b2 - k) + log_factorial(b3 - k);
        sum += (k % 2 ? -1.0 : 1.0) * std::exp(lr + log_factorial(k + 1) - ld);
    }
    return sum;
}

} // namespace detail

inline double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3) {
    using detail::twice;
    return detail::wigner3j_2(twice(j1), twice(j2), twice(j3), twice(m1), twice(m2), twice(m3));
}

/// <j1 m1 j2 m2 | J M>. Selection-rule violations give 0.
inline double cg_coefficient(double j1, double m1, double j2, double m2, double J, double M) {
    using detail::twice;
    const int a = twice(j1), b = twice(j2), c = twice(J);
    const int ma = twice(m1), mb = twice(m2), mc = twice(M);
    if (ma + mb != mc) return 0.0;
    const double w = detail::wigner3j_2(a, b, c, ma, mb, -mc);
    if (w == 0.0) return 0.0;
    const int p = (a - b + mc) / 2;
    return (p % 2 ? -1.0 : 1.0) * std::sqrt(c + 1.0) * w;
}

/// {j1 j2 j3; j4 j5 j6}.
inline double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6) {
    using detail::twice;
    return detail::wigner6j_2(twice(j1), twice(j2), twice(j3), twice(j4), twice(j5), twice(j6));
}

} // namespace rydcat::rydberg
