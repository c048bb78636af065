// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/stats.hpp"

#include <cmath>

#include "pcqa/common.hpp"

namespace pcqa {

namespace {

// series expansion, converges fast for x < a+1
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction, converges fast for x >= a+1
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_p: invalid arguments");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi_square_uniform_stat(const std::vector<size_t>& counts) {
    require(counts.size() >= 2, "chi-square: need at least 2 bins");
    size_t total = 0;
    for (size_t c : counts) total += c;
    require(total > 0, "chi-square: empty sample");
    const double expected = double(total) / double(counts.size());
    double stat = 0.0;
    for (size_t c : counts) {
        const double d = double(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

double chi_square_pvalue(double stat, int df) {
    require(df >= 1, "chi-square: df must be >= 1");
    require(stat >= 0.0, "chi-square: negative statistic");
    return gamma_q(0.5 * df, 0.5 * stat);
}

}  // namespace pcqa
