// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcqa {

/// Minimal 8-bit RGB image buffer, row-major, 3 channels.
struct ImageRGB {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;  // height*width*3

    uint8_t* at(int row, int col) { return &pixels[3 * (size_t(row) * width + col)]; }
    const uint8_t* at(int row, int col) const {
        return &pixels[3 * (size_t(row) * width + col)];
    }
};

/// Encodes to an in-memory PNG (8-bit RGB, non-interlaced, filter None).
/// The byte stream is a pure function of the pixels.
std::vector<uint8_t> encode_png(const ImageRGB& img);

void write_png(const ImageRGB& img, const std::string& path);

/// Reads PNGs written by this toolkit (8-bit RGB or RGBA, non-interlaced;
/// alpha is dropped). All five scanline filters are handled.
ImageRGB read_png(const std::string& path);

}  // namespace pcqa
