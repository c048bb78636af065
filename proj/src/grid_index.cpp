// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcqa/common.hpp"

namespace pcqa {

namespace {

inline double dist2(const double* a, const double* b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

CellGrid CellGrid::build(const double* positions, size_t n, double target_per_cell) {
    require(n >= 1, "grid build over empty point set");
    CellGrid g;

    double mn[3], mx[3];
    for (int a = 0; a < 3; ++a) mn[a] = mx[a] = positions[a];
    for (size_t i = 1; i < n; ++i) {
        const double* p = positions + 3 * i;
        for (int a = 0; a < 3; ++a) {
            if (p[a] < mn[a]) mn[a] = p[a];
            if (p[a] > mx[a]) mx[a] = p[a];
        }
    }

    const int r = std::clamp(
        static_cast<int>(std::lround(std::cbrt(double(n) / target_per_cell))), 1, 64);
    g.min_cell = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double ext = mx[a] - mn[a];
        g.lo[a] = mn[a];
        if (ext > 0.0) {
            g.res[a] = r;
            g.cell[a] = ext / r;
            g.min_cell = std::min(g.min_cell, g.cell[a]);
        } else {
            g.res[a] = 1;
            g.cell[a] = 1.0;
        }
    }
    if (!std::isfinite(g.min_cell)) g.min_cell = 1.0;  // fully degenerate extent

    const size_t ncells = g.ncells();
    std::vector<uint32_t> counts(ncells, 0);
    std::vector<uint32_t> cell_of(n);
    for (size_t i = 0; i < n; ++i) {
        int c[3];
        g.cell_coords(positions + 3 * i, c);
        const size_t id = g.cell_id(c);
        cell_of[i] = static_cast<uint32_t>(id);
        ++counts[id];
    }
    g.cell_start.resize(ncells + 1, 0);
    for (size_t c = 0; c < ncells; ++c) g.cell_start[c + 1] = g.cell_start[c] + counts[c];
    g.order.resize(n);
    std::vector<uint32_t> cursor(g.cell_start.begin(), g.cell_start.end() - 1);
    for (size_t i = 0; i < n; ++i) g.order[cursor[cell_of[i]]++] = static_cast<uint32_t>(i);
    return g;
}

void CellGrid::cell_coords(const double* p, int c[3]) const {
    for (int a = 0; a < 3; ++a) {
        const int v = static_cast<int>(std::floor((p[a] - lo[a]) / cell[a]));
        c[a] = std::clamp(v, 0, res[a] - 1);
    }
}

GridIndex::GridIndex(const double* positions, size_t n, double target_per_cell)
    : pos_(positions), n_(n), grid_(CellGrid::build(positions, n, target_per_cell)) {}

std::vector<uint32_t> GridIndex::knn(const double* query, size_t k) const {
    require(k >= 1 && k <= n_,
            "knn: k=" + std::to_string(k) + " out of range for n=" + std::to_string(n_));

    using Cand = std::pair<double, uint32_t>;  // (squared distance, index)
    std::vector<Cand> cands;
    cands.reserve(std::min(n_, 4 * k + 64));

    int cq[3];
    grid_.cell_coords(query, cq);
    const int max_ring =
        std::max({grid_.res[0], grid_.res[1], grid_.res[2]});

    auto scan_cell = [&](int cx, int cy, int cz) {
        const int c[3] = {cx, cy, cz};
        const size_t id = grid_.cell_id(c);
        const uint32_t b = grid_.cell_start[id], e = grid_.cell_start[id + 1];
        for (uint32_t t = b; t < e; ++t) {
            const uint32_t i = grid_.order[t];
            cands.emplace_back(dist2(query, pos_ + 3 * i), i);
        }
    };

    for (int ring = 0; ring <= max_ring; ++ring) {
        const int x0 = std::max(cq[0] - ring, 0), x1 = std::min(cq[0] + ring, grid_.res[0] - 1);
        const int y0 = std::max(cq[1] - ring, 0), y1 = std::min(cq[1] + ring, grid_.res[1] - 1);
        const int z0 = std::max(cq[2] - ring, 0), z1 = std::min(cq[2] + ring, grid_.res[2] - 1);
        for (int x = x0; x <= x1; ++x) {
            for (int y = y0; y <= y1; ++y) {
                for (int z = z0; z <= z1; ++z) {
                    // surface of the ring cube only
                    if (std::abs(x - cq[0]) != ring && std::abs(y - cq[1]) != ring &&
                        std::abs(z - cq[2]) != ring)
                        continue;
                    scan_cell(x, y, z);
                }
            }
        }
        if (cands.size() >= k) {
            std::nth_element(cands.begin(), cands.begin() + (k - 1), cands.end());
            // any point not yet scanned lies at distance >= ring * min_cell
            const double bound = double(ring) * grid_.min_cell;
            if (cands[k - 1].first < bound * bound || cands.size() == n_) break;
        } else if (cands.size() == n_) {
            break;
        }
    }

    std::partial_sort(cands.begin(), cands.begin() + k, cands.end());
    std::vector<uint32_t> out(k);
    for (size_t i = 0; i < k; ++i) out[i] = cands[i].second;
    return out;
}

uint32_t GridIndex::nearest(const double* query) const { return knn(query, 1)[0]; }

}  // namespace pcqa
