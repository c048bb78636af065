// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcqa/png_io.hpp"
#include "pcqa/toy/modules.hpp"
#include "pcqa/toy/tokenizer.hpp"

namespace pcqa::toy {

enum class SegTag { Text = 0, Image = 1, Point = 2, Special = 3 };

/// Input tensors for one example. Captions (alignment stage) carry no
/// views; quality/localization instructions carry all 6.
struct ToySample {
    std::vector<Mat> patches;        // s matrices, each n_toy x 6
    std::vector<ImageRGB> views;     // empty or exactly 6
    std::vector<int> prefix_tokens;  // text before the image block (bos excluded)
    std::vector<int> suffix_tokens;  // text after the point span
    std::vector<int> answer_tokens;  // supervised target tokens
};

/// Where every token of the fused sequence came from.
struct SequenceInfo {
    int n_prime = 0;
    int answer_start = 0;            // first answer position (== n_prime if no answer)
    std::vector<int> tags;           // SegTag per position
    std::vector<int> view_ids;       // view id for image tokens, -1 otherwise
    std::vector<int> token_ids;      // vocab id for text/special tokens, -1 otherwise
};

struct ForwardStats {
    double loss = 0.0;
    int answer_count = 0;
    int answer_correct = 0;  // greedy argmax matches the target
};

/// The point-image-text fusion model at toy scale: point encoder ->
/// projector -> token fusion with image and text tokens -> decoder-only LM.
class FusionModel {
public:
    FusionModel(const ToyDims& dims, uint64_t seed);

    const ToyDims& dims() const { return dims_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }

    /// Forward pass; when train is true, backpropagates and accumulates
    /// parameter gradients (cross-entropy over answer positions only).
    ForwardStats forward_backward(const ToySample& sample, bool train);

    /// Per-position next-token distributions (softmax rows over the vocab).
    Mat forward_distributions(const ToySample& sample, SequenceInfo* info = nullptr);

    /// Probability-weighted Likert score in [1,5]: the distribution at the
    /// position following the answer stem, restricted to the 5 level ids
    /// and renormalized.
    double predict_score(const ToySample& sample);

    /// Greedy two-token decode over the reserved label ids:
    /// (octant 0..7, distortion type 0..4).
    std::pair<int, int> predict_localization(const ToySample& sample);

    // --- parameters & freeze contracts -----------------------------------
    const std::vector<Param*>& params() { return registry_; }
    Param* find_param(const std::string& name);
    void zero_grads();
    /// Stage 1: only the projector trains. Stage 2: adapters (LM and point
    /// encoder q/v), projector, image encoder and view embeddings train;
    /// base weights freeze.
    void set_stage(int stage);
    void set_all_trainable();
    void zero_and_freeze_view_embeddings();

    void save_checkpoint(const std::string& path, int stage);
    static std::unique_ptr<FusionModel> load_checkpoint(const std::string& path,
                                                        int* stage = nullptr);

    /// t x 5 cell features (mean RGB in [0,1] + cell center coordinates) of
    /// one view after 32x32 downsampling and grid average pooling.
    Mat view_cell_features(const ImageRGB& view) const;

    // components are public: tests exercise them directly
    PointEncoder point_encoder;
    Projector projector;
    Linear image_cell;  // 5 -> c'
    Param view_emb;     // 6 x c'
    Param token_emb;    // V x c'
    Param pos_emb;      // context x c'
    Param seg_emb;      // 4 x c'
    std::vector<Block> blocks;
    LayerNorm ln_f;
    Linear head;        // c' -> V
    uint64_t init_seed = 0;

private:
    struct SeqCache;
    void assemble(const ToySample& sample, SeqCache& cache) const;
    Mat run_lm(SeqCache& cache) const;
    void backward(const Mat& dLogits, SeqCache& cache);

    ToyDims dims_;
    Tokenizer tokenizer_;
    std::vector<Param*> registry_;
    void build_registry();
};

}  // namespace pcqa::toy
