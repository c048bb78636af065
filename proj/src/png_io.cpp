// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/png_io.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include "pcqa/common.hpp"

namespace pcqa {

namespace {

const uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t get_u32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const uint8_t* data, size_t len) {
    put_u32(out, static_cast<uint32_t>(len));
    const size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + len));
    put_u32(out, crc);
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageRGB& img) {
    require(img.height > 0 && img.width > 0, "encode_png: empty image");
    require(img.pixels.size() == size_t(img.height) * img.width * 3,
            "encode_png: pixel buffer size mismatch");

    // raw scanlines, filter byte 0 (None) per row
    const size_t row_bytes = size_t(img.width) * 3;
    std::vector<uint8_t> raw((row_bytes + 1) * img.height);
    for (int r = 0; r < img.height; ++r) {
        raw[r * (row_bytes + 1)] = 0;
        std::memcpy(&raw[r * (row_bytes + 1) + 1], &img.pixels[r * row_bytes], row_bytes);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    const int rc = compress2(compressed.data(), &bound, raw.data(),
                             static_cast<uLong>(raw.size()), 6);
    require(rc == Z_OK, "encode_png: deflate failed");
    compressed.resize(bound);

    std::vector<uint8_t> out;
    out.insert(out.end(), kSignature, kSignature + 8);

    uint8_t ihdr[13];
    ihdr[0] = uint8_t(uint32_t(img.width) >> 24);
    ihdr[1] = uint8_t(uint32_t(img.width) >> 16);
    ihdr[2] = uint8_t(uint32_t(img.width) >> 8);
    ihdr[3] = uint8_t(img.width);
    ihdr[4] = uint8_t(uint32_t(img.height) >> 24);
    ihdr[5] = uint8_t(uint32_t(img.height) >> 16);
    ihdr[6] = uint8_t(uint32_t(img.height) >> 8);
    ihdr[7] = uint8_t(img.height);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // color type: truecolor
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter
    ihdr[12] = 0;  // interlace
    append_chunk(out, "IHDR", ihdr, 13);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);
    return out;
}

void write_png(const ImageRGB& img, const std::string& path) {
    const std::vector<uint8_t> bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!out) fail(path + ": I/O failure while writing PNG");
}

ImageRGB read_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path + ": cannot open");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    require(bytes.size() > 8 && std::memcmp(bytes.data(), kSignature, 8) == 0,
            path + ": not a PNG file");

    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const uint32_t len = get_u32(&bytes[pos]);
        require(pos + 12 + len <= bytes.size(), path + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, path + ": bad IHDR");
            width = static_cast<int>(get_u32(data));
            height = static_cast<int>(get_u32(data + 4));
            const int depth = data[8], color = data[9], interlace = data[12];
            require(depth == 8, path + ": unsupported bit depth");
            require(color == 2 || color == 6, path + ": unsupported color type");
            require(interlace == 0, path + ": interlaced PNG not supported");
            channels = (color == 2) ? 3 : 4;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    require(width > 0 && height > 0 && !idat.empty(), path + ": missing image data");

    const size_t row_bytes = size_t(width) * channels;
    std::vector<uint8_t> raw((row_bytes + 1) * height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    const int rc = uncompress(raw.data(), &raw_len, idat.data(),
                              static_cast<uLong>(idat.size()));
    require(rc == Z_OK && raw_len == raw.size(), path + ": inflate failed");

    // undo per-row filters
    std::vector<uint8_t> prev(row_bytes, 0);
    std::vector<uint8_t> cur(row_bytes);
    ImageRGB img;
    img.width = width;
    img.height = height;
    img.pixels.resize(size_t(width) * height * 3);
    const int bpp = channels;
    for (int r = 0; r < height; ++r) {
        const uint8_t filter = raw[r * (row_bytes + 1)];
        const uint8_t* src = &raw[r * (row_bytes + 1) + 1];
        for (size_t i = 0; i < row_bytes; ++i) {
            const int a = (i >= size_t(bpp)) ? cur[i - bpp] : 0;  // left
            const int b = prev[i];                                // up
            const int c = (i >= size_t(bpp)) ? prev[i - bpp] : 0; // up-left
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    v += (pa <= pb && pa <= pc) ? a : (pb <= pc) ? b : c;
                    break;
                }
                default: fail(path + ": unknown scanline filter");
            }
            cur[i] = uint8_t(v);
        }
        for (int col = 0; col < width; ++col)
            std::memcpy(img.at(r, col), &cur[size_t(col) * channels], 3);
        std::swap(prev, cur);
    }
    return img;
}

}  // namespace pcqa
