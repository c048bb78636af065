// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/toy/tokenizer.hpp"

#include <array>
#include <cctype>
#include <sstream>

#include "pcqa/common.hpp"
#include "pcqa/rng.hpp"

namespace pcqa::toy {

namespace {

const std::array<const char*, 5> kLevelWords = {"bad", "poor", "fair", "good", "excellent"};
const std::array<const char*, 8> kOctantWords = {"octant0", "octant1", "octant2", "octant3",
                                                 "octant4", "octant5", "octant6", "octant7"};
const std::array<const char*, 5> kTypeWords = {"geom-gauss", "color-gauss", "downsample",
                                               "geom-quant", "color-quant"};

}  // namespace

Tokenizer::Tokenizer(int vocab) : vocab_(vocab) {
    require(vocab_ > kHashBase, "tokenizer: vocab must exceed the reserved id range");
}

std::string Tokenizer::normalize_word(const std::string& word) {
    std::string out;
    for (char ch : word) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u) || ch == '-')
            out.push_back(static_cast<char>(std::tolower(u)));
    }
    return out;
}

const char* Tokenizer::octant_word(int octant) {
    require(octant >= 0 && octant < 8, "octant word index out of range");
    return kOctantWords[octant];
}

int Tokenizer::word_id(const std::string& word) const {
    const std::string w = normalize_word(word);
    if (w.empty()) return kPad;
    if (w == "<p_start>" || w == "p_start") return kPointStart;
    if (w == "<p_end>" || w == "p_end") return kPointEnd;
    for (int i = 0; i < 5; ++i)
        if (w == kLevelWords[i]) return kLevelBase + i;
    for (int i = 0; i < 8; ++i)
        if (w == kOctantWords[i]) return kOctantBase + i;
    for (int i = 0; i < 5; ++i)
        if (w == kTypeWords[i]) return kTypeBase + i;
    const int span = vocab_ - kHashBase;
    return kHashBase + static_cast<int>(fnv1a64(w) % uint64_t(span));
}

std::vector<int> Tokenizer::encode_words(const std::string& text) const {
    std::vector<int> ids;
    std::istringstream ss(text);
    std::string word;
    while (ss >> word) {
        const std::string w = normalize_word(word);
        if (w.empty()) continue;
        ids.push_back(word_id(w));
    }
    return ids;
}

}  // namespace pcqa::toy
