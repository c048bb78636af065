// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "pcqa/cloud.hpp"

namespace pcqa {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Reads a PLY point cloud. Accepted dialect: float32/float64 x,y,z
/// (stored as 64-bit reals), optional uchar red,green,blue; unknown vertex
/// properties and non-vertex elements are skipped. ASCII and
/// binary-little-endian bodies are supported. Parse errors name the line
/// (ASCII) or byte offset (binary) where the failure occurred.
PointCloud load_ply(const std::string& path);

/// Writes a PLY file. Binary positions are written as float64 so the
/// binary round trip is bit-exact; ASCII positions carry 6 significant
/// digits. Colors, when present, are written as uchar red,green,blue.
void save_ply(const PointCloud& cloud, const std::string& path, PlyEncoding encoding);

}  // namespace pcqa
