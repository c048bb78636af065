// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/distort.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pcqa/ply_io.hpp"
#include "pcqa/rng.hpp"

namespace pcqa {

using nlohmann::json;

const char* to_string(DistortionType t) {
    switch (t) {
        case DistortionType::GeomGauss: return "geom-gauss";
        case DistortionType::ColorGauss: return "color-gauss";
        case DistortionType::Downsample: return "downsample";
        case DistortionType::GeomQuant: return "geom-quant";
        case DistortionType::ColorQuant: return "color-quant";
    }
    return "?";
}

DistortionType distortion_type_from_string(const std::string& s) {
    if (s == "geom-gauss") return DistortionType::GeomGauss;
    if (s == "color-gauss") return DistortionType::ColorGauss;
    if (s == "downsample") return DistortionType::Downsample;
    if (s == "geom-quant") return DistortionType::GeomQuant;
    if (s == "color-quant") return DistortionType::ColorQuant;
    fail("unknown distortion type '" + s + "'");
}

namespace {

// severity ladders, level 1..7
constexpr double kGeomSigma[7] = {0.0005, 0.001, 0.002, 0.004, 0.008, 0.016, 0.032};
constexpr double kColorSigma[7] = {2, 4, 8, 16, 24, 32, 48};
constexpr double kKeepProb[7] = {0.9, 0.8, 0.65, 0.5, 0.35, 0.2, 0.1};
constexpr double kGridStep[7] = {1.0 / 512, 1.0 / 256, 1.0 / 128, 1.0 / 64,
                                 1.0 / 32,  1.0 / 16,  1.0 / 8};
constexpr int kColorBits[7] = {7, 6, 5, 4, 3, 2, 2};

struct CloudFrame {
    std::array<double, 3> centroid;
    double radius;
};

CloudFrame frame_of(const PointCloud& cloud) {
    CloudFrame f;
    f.centroid = centroid_of(cloud);
    double m2 = 0.0;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const double* p = cloud.point(i);
        const double dx = p[0] - f.centroid[0], dy = p[1] - f.centroid[1],
                     dz = p[2] - f.centroid[2];
        m2 = std::max(m2, dx * dx + dy * dy + dz * dz);
    }
    f.radius = std::sqrt(m2);
    require(f.radius > 0.0, "distort: degenerate cloud (all points coincide)");
    return f;
}

inline uint8_t clamp_channel(double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

DistortionParams severity_params(DistortionType type, Severity severity) {
    severity.validate();
    const int i = severity.level - 1;
    DistortionParams p;
    switch (type) {
        case DistortionType::GeomGauss: p.geom_sigma = kGeomSigma[i]; break;
        case DistortionType::ColorGauss: p.color_sigma = kColorSigma[i]; break;
        case DistortionType::Downsample: p.keep_prob = kKeepProb[i]; break;
        case DistortionType::GeomQuant: p.grid_step = kGridStep[i]; break;
        case DistortionType::ColorQuant: p.color_bits = kColorBits[i]; break;
    }
    return p;
}

PointCloud apply_distortion(const PointCloud& cloud, DistortionType type,
                            Severity severity, uint64_t seed,
                            const std::optional<std::vector<uint32_t>>& mask) {
    return apply_distortion_params(cloud, type, severity_params(type, severity), seed, mask);
}

PointCloud apply_distortion_params(const PointCloud& cloud, DistortionType type,
                                   const DistortionParams& params, uint64_t seed,
                                   const std::optional<std::vector<uint32_t>>& mask) {
    cloud.validate();
    const size_t n = cloud.size();

    std::vector<uint32_t> ids;
    if (mask) {
        ids = *mask;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (uint32_t i : ids)
            require(i < n, "distort: mask index " + std::to_string(i) + " out of range");
    } else {
        ids.resize(n);
        for (size_t i = 0; i < n; ++i) ids[i] = static_cast<uint32_t>(i);
    }
    if (type == DistortionType::Downsample)
        require(!ids.empty(), "distort: downsample with an empty mask");

    const bool needs_colors = (type == DistortionType::ColorGauss ||
                               type == DistortionType::ColorQuant);
    require(!needs_colors || cloud.has_colors(),
            std::string("distort: ") + to_string(type) + " requires a colored cloud");

    PointCloud out = cloud;
    Rng rng(seed, to_string(type));

    switch (type) {
        case DistortionType::GeomGauss: {
            const CloudFrame f = frame_of(cloud);
            const double sigma = params.geom_sigma * f.radius;
            const double max_r = 1.05 * f.radius;
            for (uint32_t i : ids) {
                double* p = &out.positions[3 * i];
                p[0] += sigma * rng.normal();
                p[1] += sigma * rng.normal();
                p[2] += sigma * rng.normal();
                // keep rendering framing stable
                const double dx = p[0] - f.centroid[0], dy = p[1] - f.centroid[1],
                             dz = p[2] - f.centroid[2];
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (r > max_r) {
                    const double s = max_r / r;
                    p[0] = f.centroid[0] + dx * s;
                    p[1] = f.centroid[1] + dy * s;
                    p[2] = f.centroid[2] + dz * s;
                }
            }
            break;
        }
        case DistortionType::ColorGauss: {
            for (uint32_t i : ids) {
                uint8_t* c = &out.colors[3 * i];
                c[0] = clamp_channel(c[0] + params.color_sigma * rng.normal());
                c[1] = clamp_channel(c[1] + params.color_sigma * rng.normal());
                c[2] = clamp_channel(c[2] + params.color_sigma * rng.normal());
            }
            break;
        }
        case DistortionType::Downsample: {
            std::vector<bool> drop(n, false);
            size_t dropped = 0;
            for (uint32_t i : ids) {
                if (rng.uniform() >= params.keep_prob) {
                    drop[i] = true;
                    ++dropped;
                }
            }
            require(dropped < n, "distort: downsample would remove every point");
            PointCloud kept;
            kept.source_id = cloud.source_id;
            kept.positions.reserve(3 * (n - dropped));
            if (cloud.has_colors()) kept.colors.reserve(3 * (n - dropped));
            for (size_t i = 0; i < n; ++i) {
                if (drop[i]) continue;
                const double* p = cloud.point(i);
                kept.positions.insert(kept.positions.end(), p, p + 3);
                if (cloud.has_colors()) {
                    const uint8_t* c = cloud.color(i);
                    kept.colors.insert(kept.colors.end(), c, c + 3);
                }
            }
            out = std::move(kept);
            break;
        }
        case DistortionType::GeomQuant: {
            const CloudFrame f = frame_of(cloud);
            const double step = params.grid_step * f.radius;
            require(step > 0.0, "distort: geom-quant with zero grid step");
            for (uint32_t i : ids) {
                double* p = &out.positions[3 * i];
                for (int a = 0; a < 3; ++a) {
                    const double rel = p[a] - f.centroid[a];
                    p[a] = f.centroid[a] + std::floor(rel / step + 0.5) * step;
                }
            }
            break;
        }
        case DistortionType::ColorQuant: {
            const int shift = 8 - params.color_bits;
            require(shift >= 0 && shift < 8, "distort: color bits out of range");
            const uint8_t bucket = static_cast<uint8_t>(1u << shift);
            for (uint32_t i : ids) {
                uint8_t* c = &out.colors[3 * i];
                c[0] = static_cast<uint8_t>((c[0] / bucket) * bucket);
                c[1] = static_cast<uint8_t>((c[1] / bucket) * bucket);
                c[2] = static_cast<uint8_t>((c[2] / bucket) * bucket);
            }
            break;
        }
    }
    return out;
}

LocalizationSample make_localization_sample(const PointCloud& pristine, int octant,
                                            DistortionType dtype, Severity severity,
                                            uint64_t seed) {
    require(octant >= 0 && octant <= 7, "localization: octant out of range");
    severity.validate();
    const auto center = centroid_of(pristine);

    std::vector<uint32_t> mask;
    for (size_t i = 0; i < pristine.size(); ++i) {
        if (octant_of(pristine.point(i), center.data()) == octant)
            mask.push_back(static_cast<uint32_t>(i));
    }
    if (mask.empty())
        fail("localization: octant " + std::to_string(octant) +
             " of '" + pristine.source_id + "' is empty; resample");

    LocalizationSample s;
    s.cloud = apply_distortion(pristine, dtype, severity, seed, mask);
    s.octant = octant;
    s.dtype = dtype;
    s.severity = severity;
    s.seed = seed;
    s.pristine_id = pristine.source_id;
    return s;
}

std::vector<LocalizationRecord> load_localization_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path + ": cannot open localization manifest");
    std::vector<LocalizationRecord> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            LocalizationRecord r;
            r.cloud_path = j.at("cloud_path").get<std::string>();
            r.pristine_id = j.at("pristine_id").get<std::string>();
            r.octant = j.at("octant").get<int>();
            r.dtype = distortion_type_from_string(j.at("dtype").get<std::string>());
            r.severity = j.at("severity").get<int>();
            r.seed = j.at("seed").get<uint64_t>();
            rows.push_back(std::move(r));
        } catch (const json::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
    }
    return rows;
}

void save_localization_manifest(const std::vector<LocalizationRecord>& rows,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path + ": cannot open for writing");
    for (const auto& r : rows) {
        json j;
        j["cloud_path"] = r.cloud_path;
        j["pristine_id"] = r.pristine_id;
        j["octant"] = r.octant;
        j["dtype"] = to_string(r.dtype);
        j["severity"] = r.severity;
        j["seed"] = r.seed;
        out << j.dump() << "\n";
    }
    if (!out) fail(path + ": I/O failure");
}

std::vector<LocalizationRecord> build_localization_set(
    const std::vector<std::pair<std::string, PointCloud>>& pristine,
    const LocalizationSetOptions& options, const std::string& out_dir,
    void (*warn)(const std::string&)) {
    require(!pristine.empty(), "localization set: no pristine clouds");
    require(!options.severity_levels.empty(), "localization set: empty severity pool");
    std::filesystem::create_directories(out_dir);

    std::vector<LocalizationRecord> rows;
    for (const auto& [pid, cloud] : pristine) {
        // octants occupied by this cloud
        const auto center = centroid_of(cloud);
        std::array<bool, 8> occupied{};
        for (size_t i = 0; i < cloud.size(); ++i)
            occupied[octant_of(cloud.point(i), center.data())] = true;
        std::vector<int> pool;
        for (int o = 0; o < 8; ++o)
            if (occupied[o]) pool.push_back(o);
        if (pool.size() < 8 && warn) {
            std::string missing;
            for (int o = 0; o < 8; ++o)
                if (!occupied[o]) missing += std::to_string(o) + " ";
            warn("cloud '" + pid + "': excluding empty octants " + missing);
        }

        // colorless clouds can only take geometry distortions
        std::vector<DistortionType> type_pool;
        for (int t = 0; t < kNumDistortionTypes; ++t) {
            const auto dt = static_cast<DistortionType>(t);
            if (!cloud.has_colors() &&
                (dt == DistortionType::ColorGauss || dt == DistortionType::ColorQuant))
                continue;
            type_pool.push_back(dt);
        }

        for (size_t draw = 0; draw < options.draws_per_cloud; ++draw) {
            Rng rng(options.seed, pid, draw);
            const int octant = pool[rng.uniform_index(pool.size())];
            const auto dtype = type_pool[rng.uniform_index(type_pool.size())];
            const int level = options.severity_levels[rng.uniform_index(
                options.severity_levels.size())];
            const uint64_t sample_seed = rng.next_u64();

            LocalizationSample s =
                make_localization_sample(cloud, octant, dtype, Severity{level}, sample_seed);

            LocalizationRecord r;
            r.cloud_path = (std::filesystem::path(out_dir) /
                            (pid + "_" + std::to_string(draw) + ".ply"))
                               .string();
            r.pristine_id = pid;
            r.octant = s.octant;
            r.dtype = s.dtype;
            r.severity = level;
            r.seed = sample_seed;
            save_ply(s.cloud, r.cloud_path, PlyEncoding::BinaryLittleEndian);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace pcqa
