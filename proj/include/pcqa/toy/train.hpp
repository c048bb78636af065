// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pcqa/toy/model.hpp"

namespace pcqa::toy {

struct TrainConfig {
    int stage = 2;             // 1: projector alignment, 2: adapter fine-tune
    int epochs = 100;
    int batch_size = 8;
    double lr = 0.05;
    double momentum = 0.9;
    double warmup_frac = 0.3;  // linear warmup fraction of total steps
    uint64_t seed = 0;
    bool adam = false;         // adaptive-moment variant behind a flag
    std::string curve_path;    // when set, per-epoch CSV is written here
};

struct TrainResult {
    std::vector<double> epoch_loss;      // mean answer cross-entropy
    std::vector<double> epoch_accuracy;  // answer-token argmax accuracy
    int total_steps = 0;
};

/// Minibatch training with momentum SGD and a cosine-decayed step size
/// after linear warmup. Cross-entropy is taken over answer positions only.
/// The stage's freeze contract is applied before the first step. A
/// non-finite loss aborts with diagnostics.
TrainResult train(FusionModel& model, const std::vector<ToySample>& dataset,
                  const TrainConfig& config);

}  // namespace pcqa::toy
