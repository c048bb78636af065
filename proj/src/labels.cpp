// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/labels.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace pcqa {

using nlohmann::json;

const std::array<std::string, 5>& LikertLevel::names() {
    static const std::array<std::string, 5> kNames = {"bad", "poor", "fair", "good",
                                                      "excellent"};
    return kNames;
}

const std::string& LikertLevel::name() const {
    validate();
    return names()[index - 1];
}

LikertLevel LikertLevel::from_name(const std::string& name) {
    for (int i = 0; i < 5; ++i)
        if (names()[i] == name) return LikertLevel{i + 1};
    fail("unknown likert level name '" + name + "'");
}

LikertLevel discretize(double mos, const MosRange& range, bool* clamped) {
    range.validate();
    require(std::isfinite(mos), "discretize: non-finite mos");
    bool was_clamped = false;
    double m = mos;
    if (m < range.lo) {
        m = range.lo;
        was_clamped = true;
    } else if (m > range.hi) {
        m = range.hi;
        was_clamped = true;
    }
    if (was_clamped) {
        if (clamped) *clamped = true;
        std::cerr << "warning: mos " << mos << " outside declared range [" << range.lo
                  << ", " << range.hi << "], clamped\n";
    } else if (clamped) {
        *clamped = false;
    }
    int level = 1 + static_cast<int>(std::floor(5.0 * (m - range.lo) / (range.hi - range.lo)));
    if (level > 5) level = 5;  // mos == hi
    return LikertLevel{level};
}

double dequantize(const std::array<double, 5>& probs) {
    double sum = 0.0;
    for (double p : probs) {
        require(p >= 0.0 && std::isfinite(p), "dequantize: probabilities must be >= 0");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-6,
            "dequantize: probabilities sum to " + std::to_string(sum) + ", not 1");
    double score = 0.0;
    for (int i = 0; i < 5; ++i) score += double(i + 1) * probs[i];
    return score;
}

std::string assemble_prompt(const std::string& setup_text, const std::string& render_text) {
    std::string p =
        "This is a point cloud rated for quality. It was displayed to a human in a "
        "single stimulus setup with absolute category ratings. ";
    if (!setup_text.empty()) p += setup_text + " ";
    if (!render_text.empty()) p += render_text + " ";
    for (int i = 0; i < 6; ++i) p += kImagePlaceholder;
    p += kPointStart;
    p += kPointPlaceholder;
    p += kPointEnd;
    p += " Can you rate the quality of the point cloud?";
    return p;
}

std::string answer_text(LikertLevel level) {
    return "The quality of the point cloud is " + level.name() + ".";
}

std::vector<InstructionSample> build_instruction_dataset(
    const std::vector<SampleRecord>& manifest, const MosRange& range,
    const PromptContexts& contexts) {
    range.validate();
    std::vector<InstructionSample> out;
    out.reserve(manifest.size());
    const std::string prompt = assemble_prompt(contexts.setup_text, contexts.render_text);
    for (const auto& rec : manifest) {
        require(rec.view_paths.size() == 6,
                "instruction dataset: record '" + rec.content_id + "' has " +
                    std::to_string(rec.view_paths.size()) + " views, expected 6");
        require(!rec.patch_path.empty(),
                "instruction dataset: record '" + rec.content_id + "' lacks a patch path");
        for (const auto& v : rec.view_paths)
            require(std::filesystem::exists(v), "instruction dataset: missing view " + v);
        require(std::filesystem::exists(rec.patch_path + ".bin"),
                "instruction dataset: missing patch tensor " + rec.patch_path + ".bin");

        InstructionSample s;
        s.prompt = prompt;
        s.view_paths = rec.view_paths;
        s.patch_path = rec.patch_path;
        s.level = discretize(rec.mos, range);
        s.answer = answer_text(s.level);
        s.mos = rec.mos;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<InstructionSample> load_instruction_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path + ": cannot open instruction dataset");
    std::vector<InstructionSample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            InstructionSample s;
            s.prompt = j.at("prompt").get<std::string>();
            s.view_paths = j.at("view_paths").get<std::vector<std::string>>();
            s.patch_path = j.at("patch_path").get<std::string>();
            s.answer = j.at("answer").get<std::string>();
            s.mos = j.at("mos").get<double>();
            s.level = LikertLevel{j.at("level").get<int>()};
            s.level.validate();
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
    }
    return out;
}

void save_instruction_dataset(const std::vector<InstructionSample>& samples,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path + ": cannot open for writing");
    for (const auto& s : samples) {
        json j;
        j["prompt"] = s.prompt;
        j["view_paths"] = s.view_paths;
        j["patch_path"] = s.patch_path;
        j["answer"] = s.answer;
        j["mos"] = s.mos;
        j["level"] = s.level.index;
        out << j.dump() << "\n";
    }
    if (!out) fail(path + ": I/O failure");
}

}  // namespace pcqa
