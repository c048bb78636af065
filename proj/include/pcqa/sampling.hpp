// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcqa/cloud.hpp"

namespace pcqa {

enum class PatchKind { FpsGlobal, KnnLocal, OctantCover };
enum class PatchScale { Full, Half };

const char* to_string(PatchKind k);
const char* to_string(PatchScale s);
PatchKind patch_kind_from_string(const std::string& s);
PatchScale patch_scale_from_string(const std::string& s);

/// s patches of n points with 6 features each: normalized xyz, then RGB
/// scaled to [0,1]. `indices` records each patch point's index in the
/// source cloud (after two-scale decimation these are still original-cloud
/// indices), which is what coverage accounting and the exactness tests use.
struct PatchSet {
    size_t s = 0;
    size_t n = 0;
    static constexpr int d = 6;

    std::vector<double> data;                    // s*n*6, patch-major
    std::vector<uint32_t> indices;               // s*n
    std::vector<std::array<double, 3>> anchors;  // per patch
    std::vector<PatchKind> kinds;
    std::vector<PatchScale> scales;
    uint64_t seed = 0;

    const double* patch(size_t p) const { return &data[p * n * d]; }
    const uint32_t* patch_indices(size_t p) const { return &indices[p * n]; }
};

struct SamplerConfig {
    size_t n = 8192;  // points per patch
    size_t s = 3;     // patch count (1 global + s-1 local)
    uint64_t seed = 0;
    bool two_scale = false;
    int downsample_factor = 2;

    void validate() const;
};

/// Greedy maximin (furthest point) sampling. The first index is drawn
/// uniformly from the seed; each subsequent index maximizes the minimum
/// distance to the already-selected set, ties broken toward the smaller
/// index. Bucket-accelerated, but the returned sequence is exactly the
/// greedy one.
std::vector<uint32_t> fps(const NormalizedCloud& cloud, size_t count, uint64_t seed);

/// Exact k nearest neighbors of the anchor point (anchor included), sorted
/// by ascending (distance, index).
std::vector<uint32_t> knn_patch(const NormalizedCloud& cloud, uint32_t anchor_index,
                                size_t k);

/// Patch 0: FPS global view. Patches 1..s-1: kNN around anchors drawn
/// uniformly from the RNG stream derived from (config.seed, source_id).
PatchSet sample_patches(const NormalizedCloud& cloud, const SamplerConfig& config);

/// Two-scale variant: of the s-1 local patches, ceil((s-1)/2) come from the
/// full cloud and the rest from the factor-f decimated cloud (every f-th
/// point in original index order).
PatchSet sample_two_scale(const NormalizedCloud& cloud, const SamplerConfig& config);

/// Eight deterministic patches, one per octant of the normalized cloud
/// (octants taken about the origin). The anchor for a non-empty octant is
/// the cloud point nearest to that octant's member centroid; for an empty
/// octant, the point nearest to the octant's diagonal direction at radius
/// 0.5. No RNG anywhere.
PatchSet octant_cover_patches(const NormalizedCloud& cloud, size_t k);

/// |union of sampled original indices| / N.
double coverage_fraction(const NormalizedCloud& cloud, const PatchSet& patches);

/// Flat binary tensor (f64 features then u32 indices) plus a JSON sidecar
/// describing shape, kinds, scales, anchors and seed. Writes/reads
/// base_path + ".bin" and base_path + ".json".
void save_patchset(const PatchSet& ps, const std::string& base_path);
PatchSet load_patchset(const std::string& base_path);

}  // namespace pcqa
