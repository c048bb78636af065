// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pcqa {

/// One dataset row: a cloud on disk with its subjective score and the
/// identity of the pristine content it was derived from.
struct SampleRecord {
    std::string content_id;
    double mos = 0.0;
    std::string cloud_path;
    std::optional<std::string> distortion_meta;

    // populated by the preprocess step
    std::vector<std::string> view_paths;  // 6 entries when present
    std::string patch_path;
};

std::vector<SampleRecord> load_manifest(const std::string& path);
void save_manifest(const std::vector<SampleRecord>& records, const std::string& path);

}  // namespace pcqa
