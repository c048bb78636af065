// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>
#include <omp.h>

#include "pcqa/grid_index.hpp"
#include "pcqa/rng.hpp"

namespace pcqa {

using nlohmann::json;

const char* to_string(PatchKind k) {
    switch (k) {
        case PatchKind::FpsGlobal: return "fps-global";
        case PatchKind::KnnLocal: return "knn-local";
        case PatchKind::OctantCover: return "octant-cover";
    }
    return "?";
}

const char* to_string(PatchScale s) {
    return s == PatchScale::Full ? "full" : "half";
}

PatchKind patch_kind_from_string(const std::string& s) {
    if (s == "fps-global") return PatchKind::FpsGlobal;
    if (s == "knn-local") return PatchKind::KnnLocal;
    if (s == "octant-cover") return PatchKind::OctantCover;
    fail("unknown patch kind '" + s + "'");
}

PatchScale patch_scale_from_string(const std::string& s) {
    if (s == "full") return PatchScale::Full;
    if (s == "half") return PatchScale::Half;
    fail("unknown patch scale '" + s + "'");
}

void SamplerConfig::validate() const {
    require(n >= 1, "sampler: n must be >= 1");
    require(s >= 1, "sampler: s must be >= 1");
    require(downsample_factor >= 2, "sampler: downsample_factor must be >= 2");
}

// ---------------------------------------------------------------------------
// Furthest point sampling
// ---------------------------------------------------------------------------

namespace {

inline double dist2(double ax, double ay, double az, double bx, double by, double bz) {
    const double dx = ax - bx, dy = ay - by, dz = az - bz;
    return dx * dx + dy * dy + dz * dz;
}

struct FpsBuckets {
    // points reordered bucket-contiguously (SoA)
    std::vector<double> xs, ys, zs;
    std::vector<uint32_t> idx;   // original index per slot
    std::vector<double> d2;      // min squared distance to selected; -1 = selected
    std::vector<uint32_t> start; // bucket offsets, nb+1
    // tight bounding box per bucket
    std::vector<double> blo, bhi;  // 3*nb each
    // current (max d2, original index) per bucket; val<0 means exhausted
    std::vector<double> best_val;
    std::vector<uint32_t> best_idx;
    std::vector<uint32_t> slot_of_point;  // original index -> slot
    size_t nb = 0;
};

FpsBuckets build_buckets(const double* pos, size_t n) {
    CellGrid g = CellGrid::build(pos, n, 96.0);
    FpsBuckets fb;

    // compact away empty cells
    const size_t ncells = g.ncells();
    fb.start.push_back(0);
    std::vector<std::pair<uint32_t, uint32_t>> ranges;
    for (size_t c = 0; c < ncells; ++c) {
        const uint32_t b = g.cell_start[c], e = g.cell_start[c + 1];
        if (b == e) continue;
        ranges.emplace_back(b, e);
        fb.start.push_back(fb.start.back() + (e - b));
    }
    fb.nb = ranges.size();

    fb.xs.resize(n);
    fb.ys.resize(n);
    fb.zs.resize(n);
    fb.idx.resize(n);
    fb.d2.assign(n, std::numeric_limits<double>::infinity());
    fb.slot_of_point.resize(n);
    fb.blo.assign(3 * fb.nb, std::numeric_limits<double>::infinity());
    fb.bhi.assign(3 * fb.nb, -std::numeric_limits<double>::infinity());
    fb.best_val.assign(fb.nb, std::numeric_limits<double>::infinity());
    fb.best_idx.assign(fb.nb, 0);

    size_t slot = 0;
    for (size_t b = 0; b < fb.nb; ++b) {
        for (uint32_t t = ranges[b].first; t < ranges[b].second; ++t, ++slot) {
            const uint32_t i = g.order[t];
            const double* p = pos + 3 * i;
            fb.xs[slot] = p[0];
            fb.ys[slot] = p[1];
            fb.zs[slot] = p[2];
            fb.idx[slot] = i;
            fb.slot_of_point[i] = static_cast<uint32_t>(slot);
            for (int a = 0; a < 3; ++a) {
                fb.blo[3 * b + a] = std::min(fb.blo[3 * b + a], p[a]);
                fb.bhi[3 * b + a] = std::max(fb.bhi[3 * b + a], p[a]);
            }
        }
        // initial best: all distances are +inf; smallest index wins the tie
        uint32_t bi = fb.idx[fb.start[b]];
        for (uint32_t t = fb.start[b] + 1; t < fb.start[b + 1]; ++t)
            bi = std::min(bi, fb.idx[t]);
        fb.best_idx[b] = bi;
    }
    return fb;
}

// recompute one bucket's (max d2, smallest index) pair; slots scan in
// ascending original index, so strict > keeps the smaller index on ties
void recompute_best(FpsBuckets& fb, size_t b) {
    double bv = -1.0;
    uint32_t bi = 0;
    for (uint32_t t = fb.start[b]; t < fb.start[b + 1]; ++t) {
        const double v = fb.d2[t];
        if (v > bv) {
            bv = v;
            bi = fb.idx[t];
        }
    }
    fb.best_val[b] = bv;
    fb.best_idx[b] = bi;
}

size_t bucket_of_slot(const FpsBuckets& fb, uint32_t slot) {
    const auto it = std::upper_bound(fb.start.begin(), fb.start.end(), slot);
    return static_cast<size_t>(it - fb.start.begin()) - 1;
}

}  // namespace

std::vector<uint32_t> fps(const NormalizedCloud& cloud, size_t count, uint64_t seed) {
    const size_t n = cloud.size();
    require(count >= 1 && count <= n,
            "fps: count=" + std::to_string(count) + " out of range for n=" + std::to_string(n));

    FpsBuckets fb = build_buckets(cloud.positions.data(), n);

    std::vector<uint32_t> selected;
    selected.reserve(count);

    Rng rng(seed);
    uint32_t cur = static_cast<uint32_t>(rng.uniform_index(n));
    selected.push_back(cur);

    const bool parallel = n >= 65536;

    for (size_t t = 1; t <= count; ++t) {
        // retire the point just selected
        const uint32_t slot_sel = fb.slot_of_point[cur];
        const size_t b_sel = bucket_of_slot(fb, slot_sel);
        fb.d2[slot_sel] = -1.0;
        recompute_best(fb, b_sel);
        if (t == count) break;

        const double px = cloud.positions[3 * cur + 0];
        const double py = cloud.positions[3 * cur + 1];
        const double pz = cloud.positions[3 * cur + 2];

        const int64_t nb = static_cast<int64_t>(fb.nb);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
        for (int64_t b = 0; b < nb; ++b) {
            if (fb.best_val[b] < 0.0) continue;  // bucket fully selected
            // lower bound on any distance from p to this bucket
            double lb = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double q = (a == 0 ? px : a == 1 ? py : pz);
                const double lo = fb.blo[3 * b + a], hi = fb.bhi[3 * b + a];
                const double d = (q < lo) ? lo - q : (q > hi) ? q - hi : 0.0;
                lb += d * d;
            }
            if (lb >= fb.best_val[b]) continue;  // no member can shrink

            double bv = -1.0;
            uint32_t bi = 0;
            for (uint32_t s = fb.start[b]; s < fb.start[b + 1]; ++s) {
                double v = fb.d2[s];
                if (v >= 0.0) {
                    const double nd = dist2(fb.xs[s], fb.ys[s], fb.zs[s], px, py, pz);
                    if (nd < v) {
                        v = nd;
                        fb.d2[s] = nd;
                    }
                }
                if (v > bv) {
                    bv = v;
                    bi = fb.idx[s];
                }
            }
            fb.best_val[b] = bv;
            fb.best_idx[b] = bi;
        }

        // sequential argmax over buckets; ties toward the smaller index
        double gv = -1.0;
        uint32_t gi = 0;
        for (size_t b = 0; b < fb.nb; ++b) {
            const double v = fb.best_val[b];
            if (v < 0.0) continue;
            if (v > gv || (v == gv && fb.best_idx[b] < gi)) {
                gv = v;
                gi = fb.best_idx[b];
            }
        }
        cur = gi;
        selected.push_back(cur);
    }
    return selected;
}

// ---------------------------------------------------------------------------
// kNN patches
// ---------------------------------------------------------------------------

std::vector<uint32_t> knn_patch(const NormalizedCloud& cloud, uint32_t anchor_index,
                                size_t k) {
    require(anchor_index < cloud.size(), "knn_patch: anchor index out of range");
    require(k <= cloud.size(), "knn_patch: k=" + std::to_string(k) +
                                   " exceeds cloud size " + std::to_string(cloud.size()));
    GridIndex index(cloud.positions.data(), cloud.size());
    return index.knn(cloud.point(anchor_index), k);
}

namespace {

constexpr double kColorlessGray = 200.0 / 255.0;

// copy one patch's features/indices into the set; original_indices maps
// local ids of a decimated cloud back to the source cloud (empty = identity)
void emit_patch(PatchSet& ps, size_t p, const NormalizedCloud& cloud,
                const std::vector<uint32_t>& original_indices,
                const std::vector<uint32_t>& local_indices) {
    double* out = &ps.data[p * ps.n * PatchSet::d];
    uint32_t* oi = &ps.indices[p * ps.n];
    for (size_t j = 0; j < ps.n; ++j) {
        const uint32_t local = local_indices[j];
        const uint32_t orig = original_indices.empty() ? local : original_indices[local];
        const double* q = cloud.point(local);
        out[6 * j + 0] = q[0];
        out[6 * j + 1] = q[1];
        out[6 * j + 2] = q[2];
        if (cloud.has_colors()) {
            const uint8_t* c = cloud.color(local);
            out[6 * j + 3] = c[0] / 255.0;
            out[6 * j + 4] = c[1] / 255.0;
            out[6 * j + 5] = c[2] / 255.0;
        } else {
            out[6 * j + 3] = kColorlessGray;
            out[6 * j + 4] = kColorlessGray;
            out[6 * j + 5] = kColorlessGray;
        }
        oi[j] = orig;
    }
}

std::array<double, 3> points_centroid(const NormalizedCloud& cloud,
                                      const std::vector<uint32_t>& ids) {
    double sx = 0, sy = 0, sz = 0;
    for (uint32_t i : ids) {
        const double* p = cloud.point(i);
        sx += p[0];
        sy += p[1];
        sz += p[2];
    }
    const double inv = 1.0 / double(ids.size());
    return {sx * inv, sy * inv, sz * inv};
}

}  // namespace

PatchSet sample_patches(const NormalizedCloud& cloud, const SamplerConfig& config) {
    config.validate();
    const size_t n_pts = cloud.size();
    require(n_pts >= config.n, "sample_patches: cloud has " + std::to_string(n_pts) +
                                   " points, need at least " + std::to_string(config.n));

    PatchSet ps;
    ps.s = config.s;
    ps.n = config.n;
    ps.seed = config.seed;
    ps.data.resize(ps.s * ps.n * PatchSet::d);
    ps.indices.resize(ps.s * ps.n);
    ps.anchors.resize(ps.s);
    ps.kinds.resize(ps.s);
    ps.scales.assign(ps.s, PatchScale::Full);

    // per-call stream; parallel batch order cannot change results
    Rng rng(config.seed, cloud.source_id);
    const uint64_t fps_seed = rng.next_u64();

    const std::vector<uint32_t> global = fps(cloud, config.n, fps_seed);
    emit_patch(ps, 0, cloud, {}, global);
    ps.kinds[0] = PatchKind::FpsGlobal;
    ps.anchors[0] = points_centroid(cloud, global);

    if (config.s > 1) {
        GridIndex index(cloud.positions.data(), n_pts);
        for (size_t p = 1; p < config.s; ++p) {
            const uint32_t anchor = static_cast<uint32_t>(rng.uniform_index(n_pts));
            const std::vector<uint32_t> ids = index.knn(cloud.point(anchor), config.n);
            emit_patch(ps, p, cloud, {}, ids);
            ps.kinds[p] = PatchKind::KnnLocal;
            const double* a = cloud.point(anchor);
            ps.anchors[p] = {a[0], a[1], a[2]};
        }
    }
    return ps;
}

PatchSet sample_two_scale(const NormalizedCloud& cloud, const SamplerConfig& config) {
    config.validate();
    const size_t n_pts = cloud.size();
    require(n_pts >= config.n, "sample_two_scale: cloud smaller than patch size");

    const size_t f = static_cast<size_t>(config.downsample_factor);
    // every f-th point in original index order
    std::vector<uint32_t> ds_ids;
    for (size_t i = 0; i < n_pts; i += f) ds_ids.push_back(static_cast<uint32_t>(i));
    require(ds_ids.size() >= config.n,
            "sample_two_scale: downsampled cloud has " + std::to_string(ds_ids.size()) +
                " points, need at least " + std::to_string(config.n));

    NormalizedCloud half;
    half.source_id = cloud.source_id;
    half.provenance = cloud.provenance;
    half.positions.resize(3 * ds_ids.size());
    if (cloud.has_colors()) half.colors.resize(3 * ds_ids.size());
    for (size_t j = 0; j < ds_ids.size(); ++j) {
        std::memcpy(&half.positions[3 * j], cloud.point(ds_ids[j]), 3 * sizeof(double));
        if (cloud.has_colors())
            std::memcpy(&half.colors[3 * j], cloud.color(ds_ids[j]), 3);
    }

    PatchSet ps;
    ps.s = config.s;
    ps.n = config.n;
    ps.seed = config.seed;
    ps.data.resize(ps.s * ps.n * PatchSet::d);
    ps.indices.resize(ps.s * ps.n);
    ps.anchors.resize(ps.s);
    ps.kinds.resize(ps.s);
    ps.scales.assign(ps.s, PatchScale::Full);

    Rng rng(config.seed, cloud.source_id);
    const uint64_t fps_seed = rng.next_u64();

    const std::vector<uint32_t> global = fps(cloud, config.n, fps_seed);
    emit_patch(ps, 0, cloud, {}, global);
    ps.kinds[0] = PatchKind::FpsGlobal;
    ps.anchors[0] = points_centroid(cloud, global);

    const size_t locals = config.s - 1;
    const size_t full_count = (locals + 1) / 2;  // round up

    if (locals > 0) {
        GridIndex full_index(cloud.positions.data(), n_pts);
        GridIndex half_index(half.positions.data(), half.size());
        for (size_t p = 1; p < config.s; ++p) {
            const bool from_full = (p - 1) < full_count;
            if (from_full) {
                const uint32_t anchor = static_cast<uint32_t>(rng.uniform_index(n_pts));
                const std::vector<uint32_t> ids = full_index.knn(cloud.point(anchor), config.n);
                emit_patch(ps, p, cloud, {}, ids);
                const double* a = cloud.point(anchor);
                ps.anchors[p] = {a[0], a[1], a[2]};
            } else {
                const uint32_t anchor = static_cast<uint32_t>(rng.uniform_index(half.size()));
                const std::vector<uint32_t> ids = half_index.knn(half.point(anchor), config.n);
                emit_patch(ps, p, half, ds_ids, ids);
                const double* a = half.point(anchor);
                ps.anchors[p] = {a[0], a[1], a[2]};
                ps.scales[p] = PatchScale::Half;
            }
            ps.kinds[p] = PatchKind::KnnLocal;
        }
    }
    return ps;
}

PatchSet octant_cover_patches(const NormalizedCloud& cloud, size_t k) {
    const size_t n_pts = cloud.size();
    require(k >= 1 && k <= n_pts, "octant_cover_patches: k out of range");

    PatchSet ps;
    ps.s = 8;
    ps.n = k;
    ps.seed = 0;
    ps.data.resize(ps.s * ps.n * PatchSet::d);
    ps.indices.resize(ps.s * ps.n);
    ps.anchors.resize(8);
    ps.kinds.assign(8, PatchKind::OctantCover);
    ps.scales.assign(8, PatchScale::Full);

    const std::array<double, 3> origin{0.0, 0.0, 0.0};

    // member centroids per octant
    std::array<std::array<double, 3>, 8> sums{};
    std::array<size_t, 8> counts{};
    for (size_t i = 0; i < n_pts; ++i) {
        const double* p = cloud.point(i);
        const int o = octant_of(p, origin.data());
        sums[o][0] += p[0];
        sums[o][1] += p[1];
        sums[o][2] += p[2];
        ++counts[o];
    }

    GridIndex index(cloud.positions.data(), n_pts);
    const double diag = 0.5 / std::sqrt(3.0);

    for (int o = 0; o < 8; ++o) {
        std::array<double, 3> target;
        if (counts[o] > 0) {
            target = {sums[o][0] / double(counts[o]), sums[o][1] / double(counts[o]),
                      sums[o][2] / double(counts[o])};
        } else {
            // empty octant: aim at its diagonal direction at radius 0.5
            target = {(o & 4 ? diag : -diag), (o & 2 ? diag : -diag),
                      (o & 1 ? diag : -diag)};
        }
        const uint32_t anchor = index.nearest(target.data());
        const std::vector<uint32_t> ids = index.knn(cloud.point(anchor), k);
        emit_patch(ps, static_cast<size_t>(o), cloud, {}, ids);
        const double* a = cloud.point(anchor);
        ps.anchors[o] = {a[0], a[1], a[2]};
    }
    return ps;
}

double coverage_fraction(const NormalizedCloud& cloud, const PatchSet& patches) {
    std::vector<uint32_t> ids(patches.indices.begin(), patches.indices.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return double(ids.size()) / double(cloud.size());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_patchset(const PatchSet& ps, const std::string& base_path) {
    {
        std::ofstream bin(base_path + ".bin", std::ios::binary);
        if (!bin) fail(base_path + ".bin: cannot open for writing");
        bin.write(reinterpret_cast<const char*>(ps.data.data()),
                  ps.data.size() * sizeof(double));
        bin.write(reinterpret_cast<const char*>(ps.indices.data()),
                  ps.indices.size() * sizeof(uint32_t));
        if (!bin) fail(base_path + ".bin: I/O failure");
    }
    json j;
    j["shape"] = {ps.s, ps.n, static_cast<size_t>(PatchSet::d)};
    j["dtype"] = "f64";
    j["index_dtype"] = "u32";
    j["seed"] = ps.seed;
    json kinds = json::array(), scales = json::array(), anchors = json::array();
    for (size_t p = 0; p < ps.s; ++p) {
        kinds.push_back(to_string(ps.kinds[p]));
        scales.push_back(to_string(ps.scales[p]));
        anchors.push_back({ps.anchors[p][0], ps.anchors[p][1], ps.anchors[p][2]});
    }
    j["kinds"] = kinds;
    j["scales"] = scales;
    j["anchors"] = anchors;
    std::ofstream side(base_path + ".json");
    if (!side) fail(base_path + ".json: cannot open for writing");
    side << j.dump(2) << "\n";
    if (!side) fail(base_path + ".json: I/O failure");
}

PatchSet load_patchset(const std::string& base_path) {
    std::ifstream side(base_path + ".json");
    if (!side) fail(base_path + ".json: cannot open");
    json j;
    try {
        side >> j;
    } catch (const json::exception& e) {
        fail(base_path + ".json: bad sidecar: " + e.what());
    }

    PatchSet ps;
    const auto shape = j.at("shape").get<std::vector<size_t>>();
    require(shape.size() == 3 && shape[2] == PatchSet::d,
            base_path + ".json: unexpected tensor shape");
    ps.s = shape[0];
    ps.n = shape[1];
    ps.seed = j.at("seed").get<uint64_t>();
    for (const auto& k : j.at("kinds")) ps.kinds.push_back(patch_kind_from_string(k));
    for (const auto& sc : j.at("scales")) ps.scales.push_back(patch_scale_from_string(sc));
    for (const auto& a : j.at("anchors"))
        ps.anchors.push_back({a[0].get<double>(), a[1].get<double>(), a[2].get<double>()});
    require(ps.kinds.size() == ps.s && ps.scales.size() == ps.s && ps.anchors.size() == ps.s,
            base_path + ".json: metadata arrays do not match patch count");

    ps.data.resize(ps.s * ps.n * PatchSet::d);
    ps.indices.resize(ps.s * ps.n);
    std::ifstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) fail(base_path + ".bin: cannot open");
    bin.read(reinterpret_cast<char*>(ps.data.data()), ps.data.size() * sizeof(double));
    bin.read(reinterpret_cast<char*>(ps.indices.data()), ps.indices.size() * sizeof(uint32_t));
    if (!bin) fail(base_path + ".bin: truncated tensor file");
    return ps;
}

}  // namespace pcqa
