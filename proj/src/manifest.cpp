// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/manifest.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pcqa/common.hpp"

namespace pcqa {

using nlohmann::json;

std::vector<SampleRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path + ": cannot open manifest");
    std::vector<SampleRecord> records;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        SampleRecord r;
        try {
            r.content_id = j.at("content_id").get<std::string>();
            r.mos = j.at("mos").get<double>();
            r.cloud_path = j.at("cloud_path").get<std::string>();
            if (j.contains("distortion_meta") && !j["distortion_meta"].is_null())
                r.distortion_meta = j["distortion_meta"].get<std::string>();
            if (j.contains("view_paths"))
                r.view_paths = j["view_paths"].get<std::vector<std::string>>();
            if (j.contains("patch_path")) r.patch_path = j["patch_path"].get<std::string>();
        } catch (const json::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
        require(!r.content_id.empty(),
                path + ":" + std::to_string(lineno) + ": empty content_id");
        require(std::isfinite(r.mos),
                path + ":" + std::to_string(lineno) + ": non-finite mos");
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const std::vector<SampleRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path + ": cannot open manifest for writing");
    for (const auto& r : records) {
        json j;
        j["content_id"] = r.content_id;
        j["mos"] = r.mos;
        j["cloud_path"] = r.cloud_path;
        if (r.distortion_meta) j["distortion_meta"] = *r.distortion_meta;
        if (!r.view_paths.empty()) j["view_paths"] = r.view_paths;
        if (!r.patch_path.empty()) j["patch_path"] = r.patch_path;
        out << j.dump() << "\n";
    }
    if (!out) fail(path + ": I/O failure while writing manifest");
}

}  // namespace pcqa
