// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "pcqa/common.hpp"
#include "pcqa/manifest.hpp"

namespace pcqa {

/// Five-point quality scale, index 1..5 <-> bad..excellent.
struct LikertLevel {
    int index = 1;

    static const std::array<std::string, 5>& names();
    const std::string& name() const;
    static LikertLevel from_name(const std::string& name);

    void validate() const { require(index >= 1 && index <= 5, "likert index out of [1,5]"); }
    bool operator==(const LikertLevel&) const = default;
};

/// Declared score range of a dataset (not the empirical min/max of a split).
struct MosRange {
    double lo = 1.0;
    double hi = 5.0;
    void validate() const { require(lo < hi, "mos range: lo must be < hi"); }
};

/// Equal-width binning: level = 1 + floor(5*(mos-lo)/(hi-lo)); mos == hi
/// maps to 5. Out-of-range values clamp; `clamped`, when given, reports it.
LikertLevel discretize(double mos, const MosRange& range, bool* clamped = nullptr);

/// Probability-weighted average of the level indices: sum i * probs[i-1].
/// probs must be non-negative and sum to 1 within 1e-6.
double dequantize(const std::array<double, 5>& probs);

/// Placeholder literals used in prompt text.
inline constexpr const char* kImagePlaceholder = "{IMG}";
inline constexpr const char* kPointPlaceholder = "{PTS}";
inline constexpr const char* kPointStart = "<p_start>";
inline constexpr const char* kPointEnd = "<p_end>";

/// Fixed instruction template: task framing, optional experimental-setup and
/// rendering sentences, six image placeholders, the delimited point span,
/// then the rating question. Non-empty context strings are each followed by
/// a single space.
std::string assemble_prompt(const std::string& setup_text, const std::string& render_text);

/// Answer sentence for a level.
std::string answer_text(LikertLevel level);

struct InstructionSample {
    std::string prompt;
    std::vector<std::string> view_paths;  // 6
    std::string patch_path;
    std::string answer;
    double mos = 0.0;
    LikertLevel level;
};

struct PromptContexts {
    std::string setup_text;
    std::string render_text;
};

/// One instruction row per manifest record. Records must already carry the
/// view/patch paths from preprocessing; missing files are an error.
std::vector<InstructionSample> build_instruction_dataset(
    const std::vector<SampleRecord>& manifest, const MosRange& range,
    const PromptContexts& contexts);

std::vector<InstructionSample> load_instruction_dataset(const std::string& path);
void save_instruction_dataset(const std::vector<InstructionSample>& samples,
                              const std::string& path);

}  // namespace pcqa
