// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace pcqa {

/// Uniform cell binning over a point set. Points are stored reordered by
/// (cell, original index) so cell contents scan in ascending index order,
/// which is what the smaller-index tie rules rely on.
struct CellGrid {
    int res[3] = {1, 1, 1};
    double lo[3] = {0, 0, 0};
    double cell[3] = {1, 1, 1};
    double min_cell = 1.0;
    std::vector<uint32_t> order;       // point indices grouped by cell
    std::vector<uint32_t> cell_start;  // ncells+1 offsets into order

    static CellGrid build(const double* positions, size_t n, double target_per_cell);

    size_t ncells() const { return size_t(res[0]) * res[1] * res[2]; }
    void cell_coords(const double* p, int c[3]) const;
    size_t cell_id(const int c[3]) const {
        return (size_t(c[0]) * res[1] + c[1]) * res[2] + c[2];
    }
};

/// Exact k-nearest-neighbor index. Expanding-ring search over the grid;
/// results are exact under the total order (squared distance, index).
class GridIndex {
public:
    GridIndex(const double* positions, size_t n, double target_per_cell = 64.0);

    /// The k nearest points to `query` (which need not be a cloud point),
    /// sorted by ascending (squared distance, index). k must be <= n.
    std::vector<uint32_t> knn(const double* query, size_t k) const;

    /// Index of the single nearest point to `query` (ties to smaller index).
    uint32_t nearest(const double* query) const;

    size_t size() const { return n_; }

private:
    const double* pos_;
    size_t n_;
    CellGrid grid_;
};

}  // namespace pcqa
