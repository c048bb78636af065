// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pcqa/cloud.hpp"
#include "pcqa/distort.hpp"
#include "pcqa/labels.hpp"
#include "pcqa/raster.hpp"
#include "pcqa/sampling.hpp"
#include "pcqa/toy/model.hpp"

namespace pcqa::toy {

/// Procedural colored shape clouds (sphere, cube, torus, blob, cylinder)
/// used by fixtures, the caption set and the toy benchmarks.
PointCloud make_shape_cloud(int shape_id, int color_id, double size, size_t n,
                            uint64_t seed);

const char* shape_name(int shape_id);
const char* color_name(int color_id);
constexpr int kNumShapes = 5;
constexpr int kNumColors = 6;

/// Splits an instruction prompt around its placeholder block into prefix /
/// suffix token ids.
void tokenize_prompt(const Tokenizer& tk, const std::string& prompt,
                     std::vector<int>& prefix, std::vector<int>& suffix);

/// Point-caption pairs for the alignment stage: one patch per sample, no
/// views, templated captions ("a small red sphere ...").
std::vector<ToySample> make_caption_dataset(const ToyDims& dims, size_t count,
                                            uint64_t seed);

/// Synthetic quality instruction set: distorted shape clouds whose MOS is
/// tied to the distortion severity. Returns samples with tokenized answers
/// plus the ground-truth MOS per sample.
struct QualitySet {
    std::vector<ToySample> samples;
    std::vector<double> mos;
    MosRange range{1.0, 5.0};
};
QualitySet make_quality_dataset(const ToyDims& dims, size_t count, uint64_t seed);

/// Octant-distortion benchmark: octant-cover patches (pooled mode), 6
/// rendered views and two-token answers (octant word, type word).
struct LocalizationBenchmark {
    std::vector<ToySample> samples;
    std::vector<int> octants;  // ground truth 0..7
    std::vector<int> dtypes;   // ground truth 0..4
};
LocalizationBenchmark make_localization_benchmark(const ToyDims& dims, size_t count,
                                                  uint64_t seed,
                                                  const std::vector<int>& severity_pool = {6, 7});

/// Tensorizes one on-disk instruction sample (loads the patch tensor and
/// the six view PNGs).
ToySample tensorize_instruction(const InstructionSample& inst, const ToyDims& dims,
                                const Tokenizer& tk);

/// Full in-memory preprocessing for a raw cloud: normalize, sample patches
/// with the given seed, render views, tokenize the prompt. When answer is
/// non-empty it is tokenized as the supervised target.
ToySample tensorize_from_cloud(const PointCloud& cloud, const ToyDims& dims,
                               const Tokenizer& tk, uint64_t sampling_seed,
                               const RenderConfig& render_cfg,
                               const PromptContexts& contexts,
                               const std::string& answer);

}  // namespace pcqa::toy
