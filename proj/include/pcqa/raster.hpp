// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcqa/cloud.hpp"
#include "pcqa/png_io.hpp"

namespace pcqa {

enum class Projection { Perspective, Orthographic };

struct RenderConfig {
    int height = 512;
    int width = 512;
    Projection projection = Projection::Perspective;
    double camera_distance = 2.5;     // scene units from origin
    double point_size = 0.002;        // scene units (2 mm at meter scale)
    double fov_y_deg = 45.0;          // perspective vertical field of view
    double ortho_half_extent = 1.1;   // orthographic half-height in scene units
    std::array<uint8_t, 3> background{128, 128, 128};

    void validate() const;
};

/// One of the six axis-aligned projections. view_id order is fixed:
/// 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z.
struct ViewImage {
    ImageRGB image;
    int view_id = 0;
    std::vector<double> depth;  // camera-space depth per pixel, +inf = empty

    double depth_at(int row, int col) const {
        return depth[size_t(row) * image.width + col];
    }
};

/// Splat side length in pixels for a point at the given camera-space depth:
/// ceil(point_size / pixel_footprint(depth)), clamped to [1, H].
int splat_size_px(double depth, const RenderConfig& config);

/// Renders the six fixed-viewpoint projections. Cameras sit at
/// camera_distance along each axis looking at the origin (up = +y for the
/// four horizontal views, +z for the +/-y views). Points splat as
/// screen-aligned filled squares; the per-pixel z-buffer keeps the nearest
/// point, depth ties going to the smaller original index. Colorless clouds
/// render with a constant (200,200,200) point color. Output is identical
/// regardless of thread count.
std::array<ViewImage, 6> render_views(const NormalizedCloud& cloud,
                                      const RenderConfig& config);

/// File name for one view: {sample}_{view_id}.png in out_dir.
std::string view_png_name(const std::string& sample, int view_id);

}  // namespace pcqa
