// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/raster.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

namespace pcqa {

void RenderConfig::validate() const {
    require(height >= 16 && width >= 16, "render: H,W must be >= 16");
    require(camera_distance > 1.0, "render: camera_distance must be > 1");
    require(point_size > 0.0, "render: point_size must be > 0");
    require(fov_y_deg > 0.0 && fov_y_deg < 180.0, "render: fov_y out of range");
    require(ortho_half_extent > 0.0, "render: ortho_half_extent must be > 0");
}

namespace {

struct Basis {
    double right[3], up[3], back[3];  // camera looks along -back
};

// fixed camera table; up = +y for the horizontal views, +z for the +/-y views
const Basis kBases[6] = {
    // +x
    {{0, 0, -1}, {0, 1, 0}, {1, 0, 0}},
    // -x
    {{0, 0, 1}, {0, 1, 0}, {-1, 0, 0}},
    // +y
    {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
    // -y
    {{1, 0, 0}, {0, 0, 1}, {0, -1, 0}},
    // +z
    {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
    // -z
    {{-1, 0, 0}, {0, 1, 0}, {0, 0, -1}},
};

constexpr double kDegToRad = 0.017453292519943295;

}  // namespace

int splat_size_px(double depth, const RenderConfig& config) {
    double footprint;
    if (config.projection == Projection::Perspective) {
        require(depth > 0.0, "splat_size_px: non-positive depth in perspective mode");
        footprint = 2.0 * depth * std::tan(0.5 * config.fov_y_deg * kDegToRad) /
                    double(config.height);
    } else {
        footprint = 2.0 * config.ortho_half_extent / double(config.height);
    }
    const double px = std::ceil(config.point_size / footprint);
    if (!(px >= 1.0)) return 1;
    return static_cast<int>(std::min(px, double(config.height)));
}

std::array<ViewImage, 6> render_views(const NormalizedCloud& cloud,
                                      const RenderConfig& config) {
    config.validate();
    const size_t n = cloud.size();
    const int H = config.height, W = config.width;
    const bool perspective = (config.projection == Projection::Perspective);
    const double focal = 0.5 * H / std::tan(0.5 * config.fov_y_deg * kDegToRad);
    const double ortho_scale = 0.5 * H / config.ortho_half_extent;

    std::array<ViewImage, 6> views;

    // per-point projection scratch, reused across views
    std::vector<int> cx(n), cy(n), sz(n);
    std::vector<double> dep(n);

    for (int v = 0; v < 6; ++v) {
        ViewImage& view = views[v];
        view.view_id = v;
        view.image.height = H;
        view.image.width = W;
        view.image.pixels.resize(size_t(H) * W * 3);
        for (size_t px = 0; px < size_t(H) * W; ++px) {
            view.image.pixels[3 * px + 0] = config.background[0];
            view.image.pixels[3 * px + 1] = config.background[1];
            view.image.pixels[3 * px + 2] = config.background[2];
        }
        view.depth.assign(size_t(H) * W, std::numeric_limits<double>::infinity());

        const Basis& B = kBases[v];
        const double ex = B.back[0] * config.camera_distance;
        const double ey = B.back[1] * config.camera_distance;
        const double ez = B.back[2] * config.camera_distance;

        // pass 1: project every point (parallel; slots are independent)
        const int64_t nn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(static) if (n >= 16384)
        for (int64_t i = 0; i < nn; ++i) {
            const double* p = cloud.point(i);
            const double rx = p[0] - ex, ry = p[1] - ey, rz = p[2] - ez;
            const double qx = rx * B.right[0] + ry * B.right[1] + rz * B.right[2];
            const double qy = rx * B.up[0] + ry * B.up[1] + rz * B.up[2];
            const double qz = rx * B.back[0] + ry * B.back[1] + rz * B.back[2];
            const double depth = -qz;
            if (depth <= 1e-12) {
                sz[i] = 0;  // behind the camera; skip in pass 2
                continue;
            }
            double u, w;
            if (perspective) {
                u = 0.5 * W + focal * (qx / depth);
                w = 0.5 * H - focal * (qy / depth);
            } else {
                u = 0.5 * W + ortho_scale * qx;
                w = 0.5 * H - ortho_scale * qy;
            }
            cx[i] = static_cast<int>(std::floor(u));
            cy[i] = static_cast<int>(std::floor(w));
            dep[i] = depth;
            sz[i] = splat_size_px(depth, config);
        }

        // pass 2: z-buffered splat, sequential in index order so exact
        // depth ties resolve to the smaller index on any schedule
        for (size_t i = 0; i < n; ++i) {
            const int k = sz[i];
            if (k == 0) continue;
            const int x0 = cx[i] - (k - 1) / 2;
            const int y0 = cy[i] - (k - 1) / 2;
            const int x1 = x0 + k - 1, y1 = y0 + k - 1;
            if (x1 < 0 || y1 < 0 || x0 >= W || y0 >= H) continue;

            uint8_t r = 200, g = 200, b = 200;
            if (cloud.has_colors()) {
                const uint8_t* c = cloud.color(i);
                r = c[0];
                g = c[1];
                b = c[2];
            }
            const double depth = dep[i];
            for (int y = std::max(y0, 0); y <= std::min(y1, H - 1); ++y) {
                for (int x = std::max(x0, 0); x <= std::min(x1, W - 1); ++x) {
                    const size_t px = size_t(y) * W + x;
                    if (depth < view.depth[px]) {
                        view.depth[px] = depth;
                        uint8_t* out = &view.image.pixels[3 * px];
                        out[0] = r;
                        out[1] = g;
                        out[2] = b;
                    }
                }
            }
        }
    }
    return views;
}

std::string view_png_name(const std::string& sample, int view_id) {
    return sample + "_" + std::to_string(view_id) + ".png";
}

}  // namespace pcqa
