// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/cloud.hpp"

#include <cmath>

namespace pcqa {

void PointCloud::validate() const {
    require(positions.size() % 3 == 0, "positions array not a multiple of 3");
    require(size() >= 1, "point cloud is empty");
    for (size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(positions[i])) {
            fail("non-finite coordinate at point " + std::to_string(i / 3));
        }
    }
    if (!colors.empty()) {
        require(colors.size() == positions.size(),
                "color rows (" + std::to_string(colors.size() / 3) +
                    ") do not match point rows (" + std::to_string(size()) + ")");
    }
}

std::array<double, 3> centroid_of(const PointCloud& cloud) {
    const size_t n = cloud.size();
    require(n >= 1, "centroid of empty cloud");
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double* p = cloud.point(i);
        sx += p[0];
        sy += p[1];
        sz += p[2];
    }
    return {sx / double(n), sy / double(n), sz / double(n)};
}

NormalizedCloud normalize(const PointCloud& cloud) {
    cloud.validate();
    const size_t n = cloud.size();
    const auto c = centroid_of(cloud);

    double max_r2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double* p = cloud.point(i);
        const double dx = p[0] - c[0], dy = p[1] - c[1], dz = p[2] - c[2];
        const double r2 = dx * dx + dy * dy + dz * dz;
        if (r2 > max_r2) max_r2 = r2;
    }
    const double radius = std::sqrt(max_r2);
    if (radius == 0.0) {
        fail("degenerate cloud: all " + std::to_string(n) + " points coincide");
    }

    NormalizedCloud out;
    out.positions.resize(3 * n);
    const double inv_r = 1.0 / radius;
    for (size_t i = 0; i < n; ++i) {
        const double* p = cloud.point(i);
        out.positions[3 * i + 0] = (p[0] - c[0]) * inv_r;
        out.positions[3 * i + 1] = (p[1] - c[1]) * inv_r;
        out.positions[3 * i + 2] = (p[2] - c[2]) * inv_r;
    }

    // Rounding can leave the extremal point a few ulp above the unit sphere;
    // the contract is max norm in [1-1e-9, 1].
    for (int pass = 0; pass < 3; ++pass) {
        double m2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double* p = out.point(i);
            const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            if (r2 > m2) m2 = r2;
        }
        if (m2 <= 1.0) break;
        const double s = 1.0 / std::sqrt(m2);
        for (double& v : out.positions) v *= s;
    }
    out.colors = cloud.colors;
    out.source_id = cloud.source_id;
    out.provenance = {c, radius};
    return out;
}

PointCloud denormalize(const NormalizedCloud& cloud) {
    PointCloud out;
    const size_t n = cloud.size();
    out.positions.resize(3 * n);
    const auto& c = cloud.provenance.centroid;
    const double r = cloud.provenance.radius;
    for (size_t i = 0; i < n; ++i) {
        const double* p = cloud.point(i);
        out.positions[3 * i + 0] = p[0] * r + c[0];
        out.positions[3 * i + 1] = p[1] * r + c[1];
        out.positions[3 * i + 2] = p[2] * r + c[2];
    }
    out.colors = cloud.colors;
    out.source_id = cloud.source_id;
    return out;
}

}  // namespace pcqa
