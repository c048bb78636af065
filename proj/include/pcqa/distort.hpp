// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/cloud.hpp"

namespace pcqa {

enum class DistortionType {
    GeomGauss,   // additive Gaussian position noise
    ColorGauss,  // additive Gaussian color noise
    Downsample,  // random point removal
    GeomQuant,   // position grid snapping
    ColorQuant,  // channel bit reduction
};

constexpr int kNumDistortionTypes = 5;

const char* to_string(DistortionType t);
DistortionType distortion_type_from_string(const std::string& s);

/// Severity level 1..7. The per-type parameter ladders are fixed public
/// constants (see severity_params).
struct Severity {
    int level = 1;
    void validate() const { require(level >= 1 && level <= 7, "severity level must be in [1,7]"); }
};

/// Resolved parameters for (type, level). Geometry parameters are fractions
/// of the cloud's normalization radius.
struct DistortionParams {
    double geom_sigma = 0.0;    // geom-gauss, fraction of unit radius
    double color_sigma = 0.0;   // color-gauss, 8-bit channel units
    double keep_prob = 1.0;     // downsample
    double grid_step = 0.0;     // geom-quant, fraction of unit radius
    int color_bits = 8;         // color-quant
};

DistortionParams severity_params(DistortionType type, Severity severity);

/// Applies one distortion to the masked points (all points when mask is
/// absent). Deterministic in (cloud bytes, type, severity, seed). Geometry
/// amounts scale with the cloud's own max radius about its centroid, and
/// displaced points are clamped to 1.05x that radius.
PointCloud apply_distortion(const PointCloud& cloud, DistortionType type,
                            Severity severity, uint64_t seed,
                            const std::optional<std::vector<uint32_t>>& mask = std::nullopt);

/// Same, with explicit parameters (severity ladder bypassed; used by tests
/// to probe edge values such as zero noise).
PointCloud apply_distortion_params(const PointCloud& cloud, DistortionType type,
                                   const DistortionParams& params, uint64_t seed,
                                   const std::optional<std::vector<uint32_t>>& mask = std::nullopt);

/// One synthetic localization example: a pristine cloud with exactly one
/// octant distorted. Points outside the labeled octant are bit-identical to
/// the pristine cloud. Octant membership is decided once, on the pristine
/// cloud about its centroid.
struct LocalizationSample {
    PointCloud cloud;
    int octant = 0;
    DistortionType dtype = DistortionType::GeomGauss;
    Severity severity;
    uint64_t seed = 0;
    std::string pristine_id;
};

LocalizationSample make_localization_sample(const PointCloud& pristine, int octant,
                                            DistortionType dtype, Severity severity,
                                            uint64_t seed);

/// Manifest row for a generated localization sample.
struct LocalizationRecord {
    std::string cloud_path;
    std::string pristine_id;
    int octant = 0;
    DistortionType dtype = DistortionType::GeomGauss;
    int severity = 1;
    uint64_t seed = 0;
};

std::vector<LocalizationRecord> load_localization_manifest(const std::string& path);
void save_localization_manifest(const std::vector<LocalizationRecord>& rows,
                                const std::string& path);

struct LocalizationSetOptions {
    size_t draws_per_cloud = 1;
    uint64_t seed = 0;
    std::vector<int> severity_levels = {1, 2, 3, 4, 5, 6, 7};  // uniform draw pool
};

/// Generates draws_per_cloud samples per pristine cloud with labels drawn
/// uniformly over (non-empty octant x type x severity). Writes one PLY per
/// sample into out_dir and returns the manifest rows. Clouds with empty
/// octants get them excluded from the draw (noted via the warn callback).
std::vector<LocalizationRecord> build_localization_set(
    const std::vector<std::pair<std::string, PointCloud>>& pristine,
    const LocalizationSetOptions& options, const std::string& out_dir,
    void (*warn)(const std::string&) = nullptr);

}  // namespace pcqa
