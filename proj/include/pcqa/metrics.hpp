// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcqa/manifest.hpp"

namespace pcqa {

/// Correlation value with an explicit defined flag; a constant input vector
/// makes the coefficient undefined (flagged, not silently zero).
struct Correlation {
    double value = 0.0;
    bool defined = false;
};

/// Mid-ranks (average ranks for ties), 1-based.
std::vector<double> midranks(const std::vector<double>& v);

/// Pearson correlation of the raw values.
Correlation pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman rank-order correlation: Pearson of mid-ranks.
Correlation srocc(const std::vector<double>& pred, const std::vector<double>& mos);

enum class PlccFit { None, Logistic4 };

struct PlccResult {
    Correlation corr;
    bool fit_fell_back = false;  // logistic fit did not converge; raw used
    std::array<double, 4> beta{};
};

/// Pearson correlation, optionally after fitting the 4-parameter logistic
/// beta1 + beta2 / (1 + exp(-(x - beta3)/|beta4|)) to (pred -> mos) by
/// damped Gauss-Newton (<= 500 iterations; falls back to raw on
/// non-convergence, setting fit_fell_back).
PlccResult plcc(const std::vector<double>& pred, const std::vector<double>& mos,
                PlccFit fit = PlccFit::None);

/// Exact-match fraction.
double classification_accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Split/seed protocol
// ---------------------------------------------------------------------------

struct SplitPlan {
    int split_id = 0;  // 1..n_splits
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

/// Content-separated 4:1 splits: per split a seeded shuffle of the distinct
/// content ids cut at 80%. Split i uses seed+i. All distorted variants of a
/// content travel together because membership is by content_id.
std::vector<SplitPlan> make_splits(const std::vector<SampleRecord>& manifest,
                                   int n_splits, uint64_t seed);

/// Trains once per split, then predicts the test set under each sampling
/// seed. Implementations must be deterministic in (inputs, seeds).
class ProtocolRunner {
public:
    virtual ~ProtocolRunner() = default;
    virtual void train(const std::vector<SampleRecord>& train_set, int split_id) = 0;
    virtual double predict(const SampleRecord& sample, uint64_t sampling_seed) = 0;
};

struct ProtocolOptions {
    int n_seeds = 10;
    uint64_t seed_base = 0;
    PlccFit plcc_fit = PlccFit::None;
};

struct MetricReport {
    int n_splits = 0;
    int n_seeds = 0;
    std::vector<std::vector<double>> srocc_grid;  // [split][seed]
    std::vector<std::vector<double>> plcc_grid;
    std::vector<double> srocc_split_mean;
    std::vector<double> plcc_split_mean;
    double srocc_mean = 0.0;
    double plcc_mean = 0.0;
    std::vector<std::string> failures;  // per-sample runner failures
    int undefined_cells = 0;            // grid cells with undefined correlations

    bool ok() const { return failures.empty() && undefined_cells == 0; }
    std::string to_json() const;
    std::string to_csv() const;
};

MetricReport run_protocol(ProtocolRunner& runner,
                          const std::vector<SampleRecord>& manifest,
                          const std::vector<SplitPlan>& plans,
                          const ProtocolOptions& options = {});

}  // namespace pcqa
