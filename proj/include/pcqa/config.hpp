// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "pcqa/distort.hpp"
#include "pcqa/labels.hpp"
#include "pcqa/metrics.hpp"
#include "pcqa/raster.hpp"
#include "pcqa/sampling.hpp"
#include "pcqa/toy/dims.hpp"
#include "pcqa/toy/train.hpp"

namespace pcqa {

/// Plain-text key=value pipeline configuration. '#' starts a comment.
/// Unknown keys are rejected up front, before any work starts.
class PipelineConfig {
public:
    PipelineConfig();  // defaults only
    static PipelineConfig load(const std::string& path);

    /// Parses one "key=value" assignment (also used for CLI overrides).
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key) const;
    int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Overrides every *.seed key at once (the CLI --seed flag).
    void override_seed(uint64_t seed);

    SamplerConfig sampler() const;
    RenderConfig render() const;
    MosRange mos_range() const;
    PromptContexts prompt_contexts() const;
    LocalizationSetOptions localization() const;
    toy::ToyDims toy_dims() const;
    toy::TrainConfig train() const;
    ProtocolOptions protocol() const;
    int protocol_splits() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace pcqa
