// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace pcqa::toy {

/// Toy text tokenizer: whitespace words, lowercased and stripped to
/// [a-z0-9-], hashed into the tail of the vocabulary. The head of the
/// vocabulary is reserved for ids with task semantics: pad/bos, the two
/// point-span markers, the 5 quality levels, 8 octant words and 5
/// distortion-type words.
class Tokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kPointStart = 2;
    static constexpr int kPointEnd = 3;
    static constexpr int kLevelBase = 4;   // 4..8   bad..excellent
    static constexpr int kOctantBase = 9;  // 9..16  octant0..octant7
    static constexpr int kTypeBase = 17;   // 17..21 distortion types
    static constexpr int kHashBase = 22;

    explicit Tokenizer(int vocab);

    int vocab() const { return vocab_; }

    /// Single word -> id (reserved if known, hashed otherwise).
    int word_id(const std::string& word) const;

    /// Whitespace-split text -> ids. Words that normalize to nothing are
    /// dropped.
    std::vector<int> encode_words(const std::string& text) const;

    static std::string normalize_word(const std::string& word);

    static int level_id(int level_index_1based) { return kLevelBase + level_index_1based - 1; }
    static int octant_id(int octant) { return kOctantBase + octant; }
    static int type_id(int dtype) { return kTypeBase + dtype; }

    static const char* octant_word(int octant);  // "octant0".."octant7"

private:
    int vocab_;
};

}  // namespace pcqa::toy
