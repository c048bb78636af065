// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates the tiny fixture clouds bundled under data/fixtures. The
// outputs are committed so tests run with zero downloads; rerun only when
// the generator changes.

#include <filesystem>
#include <iostream>

#include "pcqa/distort.hpp"
#include "pcqa/manifest.hpp"
#include "pcqa/ply_io.hpp"
#include "pcqa/toy/data.hpp"

using namespace pcqa;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "data/fixtures";
    fs::create_directories(out_dir);

    struct Spec {
        const char* name;
        int shape, color;
        double size;
        uint64_t seed;
    };
    const Spec specs[] = {
        {"sphere_red", 0, 0, 0.8, 11},
        {"cube_green", 1, 1, 0.8, 22},
        {"torus_blue", 2, 2, 0.8, 33},
    };

    std::vector<SampleRecord> pristine_manifest;
    std::vector<SampleRecord> mos_manifest;
    for (const Spec& sp : specs) {
        PointCloud cloud = toy::make_shape_cloud(sp.shape, sp.color, sp.size, 1800, sp.seed);
        cloud.source_id = sp.name;
        const std::string path = out_dir + "/" + sp.name + ".ply";
        save_ply(cloud, path, PlyEncoding::BinaryLittleEndian);

        SampleRecord rec;
        rec.content_id = sp.name;
        rec.mos = 5.0;  // pristine
        rec.cloud_path = path;
        pristine_manifest.push_back(rec);
        mos_manifest.push_back(rec);

        // a few distorted variants with severity-tied MOS for pipeline tests
        const int severities[3] = {2, 4, 6};
        for (int k = 0; k < 3; ++k) {
            PointCloud d = apply_distortion(cloud, DistortionType::GeomGauss,
                                            Severity{severities[k]}, sp.seed * 97 + k);
            d.source_id = sp.name + std::string("_d") + std::to_string(k);
            const std::string dpath = out_dir + "/" + d.source_id + ".ply";
            save_ply(d, dpath, PlyEncoding::BinaryLittleEndian);
            SampleRecord drec;
            drec.content_id = sp.name;
            drec.mos = 4.2 - 1.3 * k;
            drec.cloud_path = dpath;
            drec.distortion_meta = "geom-gauss l" + std::to_string(severities[k]);
            mos_manifest.push_back(drec);
        }
    }
    save_manifest(pristine_manifest, out_dir + "/pristine.jsonl");
    save_manifest(mos_manifest, out_dir + "/manifest.jsonl");
    std::cout << "fixtures written to " << out_dir << "\n";
    return 0;
}
