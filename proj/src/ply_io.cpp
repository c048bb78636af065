// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/ply_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace pcqa {

namespace {

enum class ScalarType { I8, U8, I16, U16, I32, U32, F32, F64, Unknown };

size_t scalar_size(ScalarType t) {
    switch (t) {
        case ScalarType::I8:
        case ScalarType::U8: return 1;
        case ScalarType::I16:
        case ScalarType::U16: return 2;
        case ScalarType::I32:
        case ScalarType::U32:
        case ScalarType::F32: return 4;
        case ScalarType::F64: return 8;
        default: return 0;
    }
}

ScalarType parse_type(const std::string& s) {
    if (s == "char" || s == "int8") return ScalarType::I8;
    if (s == "uchar" || s == "uint8") return ScalarType::U8;
    if (s == "short" || s == "int16") return ScalarType::I16;
    if (s == "ushort" || s == "uint16") return ScalarType::U16;
    if (s == "int" || s == "int32") return ScalarType::I32;
    if (s == "uint" || s == "uint32") return ScalarType::U32;
    if (s == "float" || s == "float32") return ScalarType::F32;
    if (s == "double" || s == "float64") return ScalarType::F64;
    return ScalarType::Unknown;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::Unknown;
    bool is_list = false;
    ScalarType count_type = ScalarType::Unknown;
};

struct Element {
    std::string name;
    size_t count = 0;
    std::vector<Property> props;
};

struct Header {
    PlyEncoding encoding = PlyEncoding::Ascii;
    std::vector<Element> elements;
    size_t header_lines = 0;
    size_t header_bytes = 0;
};

[[noreturn]] void header_fail(const std::string& path, size_t line, const std::string& msg) {
    fail(path + ": malformed PLY header at line " + std::to_string(line) + ": " + msg);
}

Header parse_header(std::istream& in, const std::string& path) {
    Header h;
    std::string line;
    size_t lineno = 0;
    size_t bytes = 0;

    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++lineno;
        bytes += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") header_fail(path, 1, "missing 'ply' magic");

    bool have_format = false;
    bool ended = false;
    while (next_line()) {
        std::istringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
        if (kw == "format") {
            std::string fmt, ver;
            ss >> fmt >> ver;
            if (fmt == "ascii") h.encoding = PlyEncoding::Ascii;
            else if (fmt == "binary_little_endian") h.encoding = PlyEncoding::BinaryLittleEndian;
            else header_fail(path, lineno, "unsupported format '" + fmt + "'");
            if (ver != "1.0") header_fail(path, lineno, "unsupported version '" + ver + "'");
            have_format = true;
        } else if (kw == "element") {
            Element e;
            long long cnt = -1;
            ss >> e.name >> cnt;
            if (e.name.empty() || cnt < 0) header_fail(path, lineno, "bad element declaration");
            e.count = static_cast<size_t>(cnt);
            h.elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (h.elements.empty()) header_fail(path, lineno, "property before any element");
            Property p;
            std::string t1;
            ss >> t1;
            if (t1 == "list") {
                std::string tc, tv;
                ss >> tc >> tv >> p.name;
                p.is_list = true;
                p.count_type = parse_type(tc);
                p.type = parse_type(tv);
                if (p.count_type == ScalarType::Unknown || p.type == ScalarType::Unknown)
                    header_fail(path, lineno, "unknown list property types");
            } else {
                ss >> p.name;
                p.type = parse_type(t1);
                if (p.type == ScalarType::Unknown)
                    header_fail(path, lineno, "unknown property type '" + t1 + "'");
            }
            if (p.name.empty()) header_fail(path, lineno, "property without a name");
            h.elements.back().props.push_back(std::move(p));
        } else if (kw == "end_header") {
            ended = true;
            break;
        } else {
            header_fail(path, lineno, "unrecognized keyword '" + kw + "'");
        }
    }
    if (!ended) header_fail(path, lineno, "missing end_header");
    if (!have_format) header_fail(path, lineno, "missing format line");
    h.header_lines = lineno;
    h.header_bytes = bytes;
    return h;
}

double read_scalar_le(const unsigned char* p, ScalarType t) {
    switch (t) {
        case ScalarType::I8: return static_cast<double>(static_cast<int8_t>(p[0]));
        case ScalarType::U8: return static_cast<double>(p[0]);
        case ScalarType::I16: {
            int16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }
        case ScalarType::U16: {
            uint16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }
        case ScalarType::I32: {
            int32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }
        case ScalarType::U32: {
            uint32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }
        case ScalarType::F32: {
            float v;
            std::memcpy(&v, p, 4);
            return v;
        }
        case ScalarType::F64: {
            double v;
            std::memcpy(&v, p, 8);
            return v;
        }
        default: return 0.0;
    }
}

struct VertexLayout {
    int ix = -1, iy = -1, iz = -1;          // property indices
    int ir = -1, ig = -1, ib = -1;
    bool has_color() const { return ir >= 0 && ig >= 0 && ib >= 0; }
};

VertexLayout resolve_layout(const Element& vertex, const std::string& path) {
    VertexLayout lay;
    for (int i = 0; i < static_cast<int>(vertex.props.size()); ++i) {
        const Property& p = vertex.props[i];
        if (p.is_list) continue;
        if (p.name == "x" || p.name == "y" || p.name == "z") {
            if (p.type != ScalarType::F32 && p.type != ScalarType::F64)
                fail(path + ": position property '" + p.name +
                     "' must be float32 or float64");
            (p.name == "x" ? lay.ix : p.name == "y" ? lay.iy : lay.iz) = i;
        } else if (p.name == "red" || p.name == "green" || p.name == "blue") {
            if (p.type != ScalarType::U8)
                fail(path + ": color property '" + p.name + "' must be uchar");
            (p.name == "red" ? lay.ir : p.name == "green" ? lay.ig : lay.ib) = i;
        }
    }
    if (lay.ix < 0 || lay.iy < 0 || lay.iz < 0)
        fail(path + ": vertex element lacks float x,y,z properties");
    const int got = (lay.ir >= 0) + (lay.ig >= 0) + (lay.ib >= 0);
    if (got != 0 && got != 3)
        fail(path + ": vertex element has a partial red/green/blue color set");
    return lay;
}

}  // namespace

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path + ": cannot open file");

    Header h = parse_header(in, path);

    const Element* vertex = nullptr;
    for (const auto& e : h.elements)
        if (e.name == "vertex") vertex = &e;
    if (!vertex) fail(path + ": no vertex element declared");
    if (vertex->count == 0) fail(path + ": vertex element declares 0 vertices");

    VertexLayout lay = resolve_layout(*vertex, path);

    PointCloud cloud;
    cloud.source_id = std::filesystem::path(path).filename().string();
    cloud.positions.resize(vertex->count * 3);
    if (lay.has_color()) cloud.colors.resize(vertex->count * 3);

    auto check_finite = [&](double v, size_t row, size_t where, bool ascii) {
        if (!std::isfinite(v)) {
            fail(path + ": non-finite coordinate in vertex " + std::to_string(row) +
                 (ascii ? " at line " : " at byte offset ") + std::to_string(where));
        }
    };

    if (h.encoding == PlyEncoding::Ascii) {
        size_t lineno = h.header_lines;
        std::string line;
        for (const auto& e : h.elements) {
            const bool is_vertex = (&e == vertex);
            for (size_t row = 0; row < e.count; ++row) {
                if (!std::getline(in, line)) {
                    fail(path + ": truncated body: element '" + e.name + "' declares " +
                         std::to_string(e.count) + " rows but row " + std::to_string(row) +
                         " is missing (line " + std::to_string(lineno + row + 1) + ")");
                }
                ++lineno;
                if (!is_vertex) continue;
                std::istringstream ss(line);
                std::vector<double> vals;
                vals.reserve(e.props.size());
                for (const auto& p : e.props) {
                    if (p.is_list) {
                        long long cnt;
                        if (!(ss >> cnt))
                            fail(path + ": bad list count at line " + std::to_string(lineno));
                        double dummy;
                        for (long long k = 0; k < cnt; ++k) ss >> dummy;
                        vals.push_back(0.0);
                    } else {
                        double v;
                        if (!(ss >> v))
                            fail(path + ": vertex " + std::to_string(row) +
                                 " has too few values at line " + std::to_string(lineno));
                        vals.push_back(v);
                    }
                }
                double* q = &cloud.positions[3 * row];
                q[0] = vals[lay.ix];
                q[1] = vals[lay.iy];
                q[2] = vals[lay.iz];
                check_finite(q[0], row, lineno, true);
                check_finite(q[1], row, lineno, true);
                check_finite(q[2], row, lineno, true);
                if (lay.has_color()) {
                    cloud.colors[3 * row + 0] = static_cast<uint8_t>(vals[lay.ir]);
                    cloud.colors[3 * row + 1] = static_cast<uint8_t>(vals[lay.ig]);
                    cloud.colors[3 * row + 2] = static_cast<uint8_t>(vals[lay.ib]);
                }
            }
        }
    } else {
        size_t offset = h.header_bytes;
        for (const auto& e : h.elements) {
            const bool is_vertex = (&e == vertex);
            // fixed-size fast path when the element has no lists
            bool has_list = false;
            size_t row_size = 0;
            std::vector<size_t> prop_off(e.props.size(), 0);
            for (size_t i = 0; i < e.props.size(); ++i) {
                if (e.props[i].is_list) {
                    has_list = true;
                    break;
                }
                prop_off[i] = row_size;
                row_size += scalar_size(e.props[i].type);
            }

            if (!has_list) {
                std::vector<unsigned char> buf(row_size);
                for (size_t row = 0; row < e.count; ++row) {
                    in.read(reinterpret_cast<char*>(buf.data()), row_size);
                    if (static_cast<size_t>(in.gcount()) != row_size) {
                        fail(path + ": truncated body: element '" + e.name + "' declares " +
                             std::to_string(e.count) + " rows but data ends in row " +
                             std::to_string(row) + " at byte offset " +
                             std::to_string(offset + in.gcount()));
                    }
                    if (is_vertex) {
                        double* q = &cloud.positions[3 * row];
                        q[0] = read_scalar_le(buf.data() + prop_off[lay.ix], e.props[lay.ix].type);
                        q[1] = read_scalar_le(buf.data() + prop_off[lay.iy], e.props[lay.iy].type);
                        q[2] = read_scalar_le(buf.data() + prop_off[lay.iz], e.props[lay.iz].type);
                        check_finite(q[0], row, offset, false);
                        check_finite(q[1], row, offset, false);
                        check_finite(q[2], row, offset, false);
                        if (lay.has_color()) {
                            cloud.colors[3 * row + 0] = buf[prop_off[lay.ir]];
                            cloud.colors[3 * row + 1] = buf[prop_off[lay.ig]];
                            cloud.colors[3 * row + 2] = buf[prop_off[lay.ib]];
                        }
                    }
                    offset += row_size;
                }
            } else {
                // general path: walk property by property
                std::vector<double> vals(e.props.size());
                std::vector<unsigned char> buf(8);
                auto read_one = [&](ScalarType t) -> double {
                    const size_t sz = scalar_size(t);
                    in.read(reinterpret_cast<char*>(buf.data()), sz);
                    if (static_cast<size_t>(in.gcount()) != sz)
                        fail(path + ": truncated body in element '" + e.name +
                             "' at byte offset " + std::to_string(offset + in.gcount()));
                    offset += sz;
                    return read_scalar_le(buf.data(), t);
                };
                for (size_t row = 0; row < e.count; ++row) {
                    for (size_t i = 0; i < e.props.size(); ++i) {
                        const Property& p = e.props[i];
                        if (p.is_list) {
                            const long long cnt = static_cast<long long>(read_one(p.count_type));
                            for (long long k = 0; k < cnt; ++k) read_one(p.type);
                            vals[i] = 0.0;
                        } else {
                            vals[i] = read_one(p.type);
                        }
                    }
                    if (is_vertex) {
                        double* q = &cloud.positions[3 * row];
                        q[0] = vals[lay.ix];
                        q[1] = vals[lay.iy];
                        q[2] = vals[lay.iz];
                        check_finite(q[0], row, offset, false);
                        check_finite(q[1], row, offset, false);
                        check_finite(q[2], row, offset, false);
                        if (lay.has_color()) {
                            cloud.colors[3 * row + 0] = static_cast<uint8_t>(vals[lay.ir]);
                            cloud.colors[3 * row + 1] = static_cast<uint8_t>(vals[lay.ig]);
                            cloud.colors[3 * row + 2] = static_cast<uint8_t>(vals[lay.ib]);
                        }
                    }
                }
            }
        }
    }

    cloud.validate();
    return cloud;
}

void save_ply(const PointCloud& cloud, const std::string& path, PlyEncoding encoding) {
    cloud.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path + ": cannot open for writing");

    const size_t n = cloud.size();
    const bool rgb = cloud.has_colors();

    out << "ply\n";
    out << "format "
        << (encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
    out << "element vertex " << n << "\n";
    const char* pos_type = (encoding == PlyEncoding::Ascii) ? "float" : "double";
    out << "property " << pos_type << " x\n";
    out << "property " << pos_type << " y\n";
    out << "property " << pos_type << " z\n";
    if (rgb) {
        out << "property uchar red\n";
        out << "property uchar green\n";
        out << "property uchar blue\n";
    }
    out << "end_header\n";

    if (encoding == PlyEncoding::Ascii) {
        char buf[128];
        for (size_t i = 0; i < n; ++i) {
            const double* p = cloud.point(i);
            int len = std::snprintf(buf, sizeof(buf), "%.6g %.6g %.6g", p[0], p[1], p[2]);
            out.write(buf, len);
            if (rgb) {
                const uint8_t* c = cloud.color(i);
                len = std::snprintf(buf, sizeof(buf), " %d %d %d", c[0], c[1], c[2]);
                out.write(buf, len);
            }
            out.put('\n');
        }
    } else {
        for (size_t i = 0; i < n; ++i) {
            out.write(reinterpret_cast<const char*>(cloud.point(i)), 3 * sizeof(double));
            if (rgb) out.write(reinterpret_cast<const char*>(cloud.color(i)), 3);
        }
    }
    out.flush();
    if (!out) fail(path + ": I/O failure while writing");
}

}  // namespace pcqa
