// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcqa/common.hpp"

namespace pcqa {

/// Raw point cloud: N xyz positions (model units) and optional 8-bit RGB.
/// Positions are interleaved [x0,y0,z0, x1,y1,z1, ...].
struct PointCloud {
    std::vector<double> positions;
    std::vector<uint8_t> colors;  // empty, or exactly 3*size() entries
    std::string source_id;

    size_t size() const { return positions.size() / 3; }
    bool has_colors() const { return !colors.empty(); }

    const double* point(size_t i) const { return &positions[3 * i]; }
    const uint8_t* color(size_t i) const { return &colors[3 * i]; }

    /// Enforces the type invariants: N >= 1, finite coordinates, color rows
    /// matching point rows. Throws Error on violation.
    void validate() const;
};

/// Affine map recorded by normalize() so it can be inverted.
struct NormalizationParams {
    std::array<double, 3> centroid{0.0, 0.0, 0.0};
    double radius = 1.0;  // max distance from centroid in the original cloud
};

/// Zero-mean cloud scaled so the furthest point sits on the unit sphere.
struct NormalizedCloud {
    std::vector<double> positions;
    std::vector<uint8_t> colors;
    std::string source_id;
    NormalizationParams provenance;

    size_t size() const { return positions.size() / 3; }
    bool has_colors() const { return !colors.empty(); }
    const double* point(size_t i) const { return &positions[3 * i]; }
    const uint8_t* color(size_t i) const { return &colors[3 * i]; }
};

/// Center on the centroid and scale by the max point norm. Colors pass
/// through unchanged. Throws Error when all points coincide.
NormalizedCloud normalize(const PointCloud& cloud);

/// Inverse of normalize() via the recorded provenance.
PointCloud denormalize(const NormalizedCloud& cloud);

/// Octant index in [0,7]: (x>=cx)*4 + (y>=cy)*2 + (z>=cz)*1.
/// Coordinates exactly equal to the center count as >=.
inline int octant_of(const double* p, const double* center) {
    return (p[0] >= center[0] ? 4 : 0) + (p[1] >= center[1] ? 2 : 0) +
           (p[2] >= center[2] ? 1 : 0);
}

inline int octant_of(const std::array<double, 3>& p, const std::array<double, 3>& c) {
    return octant_of(p.data(), c.data());
}

/// Centroid of a raw cloud (arithmetic mean per axis).
std::array<double, 3> centroid_of(const PointCloud& cloud);

}  // namespace pcqa
