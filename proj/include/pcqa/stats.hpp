// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace pcqa {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Pearson chi-square statistic of observed counts against a uniform
/// expectation over the bins.
double chi_square_uniform_stat(const std::vector<size_t>& counts);

/// Survival p-value of a chi-square statistic with df degrees of freedom.
double chi_square_pvalue(double stat, int df);

}  // namespace pcqa
