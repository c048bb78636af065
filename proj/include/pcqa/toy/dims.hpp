// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pcqa/common.hpp"

namespace pcqa::toy {

/// Desk-scale model dimensions. The full-scale counterparts this emulates
/// are documented in the README constants table; these defaults are sized
/// so a complete training run finishes in minutes on a laptop CPU.
struct ToyDims {
    int s = 3;          // patches per sample
    int n_toy = 256;    // points per patch consumed by the encoder
    static constexpr int d = 6;
    int m = 17;         // patch features: m-1 query-pooled + 1 max-pooled
    int c = 32;         // point feature width
    int c_prime = 64;   // token width
    int t = 4;          // image tokens per view
    int layers = 2;     // LM blocks
    int heads = 4;
    int vocab = 64;
    int context = 256;
    int rank = 4;       // low-rank adapter rank
    double alpha = 8.0; // adapter scale; effective delta = (alpha/rank) * A*B
    bool pool_patches = false;  // average-pool patch features into one token

    void validate() const {
        require(s >= 1 && n_toy >= 1 && m >= 2 && c >= 1 && c_prime >= 1 && t >= 1 &&
                    layers >= 1 && heads >= 1 && vocab >= 24 && context >= 8 && rank >= 1,
                "toy dims: all dimensions must be positive (vocab >= 24)");
        require(c_prime % heads == 0, "toy dims: c_prime must be divisible by heads");
        require(alpha > 0.0, "toy dims: alpha must be positive");
    }
};

}  // namespace pcqa::toy
