// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pcqa {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "sampler.n", "sampler.s", "sampler.seed", "sampler.two_scale",
        "sampler.downsample_factor",
        "render.height", "render.width", "render.projection", "render.camera_distance",
        "render.point_size", "render.fov_y", "render.ortho_half_extent",
        "render.background",
        "mos.lo", "mos.hi",
        "prompt.setup_text", "prompt.render_text",
        "distort.draws_per_cloud", "distort.seed", "distort.severity_levels",
        "toy.s", "toy.n", "toy.m", "toy.c", "toy.c_prime", "toy.t", "toy.layers",
        "toy.heads", "toy.vocab", "toy.context", "toy.rank", "toy.alpha",
        "toy.pool_patches",
        "train.stage", "train.epochs", "train.batch_size", "train.lr", "train.momentum",
        "train.warmup_frac", "train.seed", "train.adam",
        "protocol.n_splits", "protocol.n_seeds", "protocol.seed", "protocol.plcc_fit",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

PipelineConfig::PipelineConfig() = default;

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path + ": cannot open config");
    PipelineConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            fail(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) fail("unknown config key '" + key + "'");
    values_[key] = value;
}

std::string PipelineConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    require(it != values_.end(), "config key '" + key + "' not set");
    return it->second;
}

int64_t PipelineConfig::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        const int64_t out = std::stoll(v, &pos);
        require(pos == v.size(), "");
        return out;
    } catch (...) {
        fail("config key '" + key + "': '" + v + "' is not an integer");
    }
}

double PipelineConfig::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        require(pos == v.size(), "");
        return out;
    } catch (...) {
        fail("config key '" + key + "': '" + v + "' is not a number");
    }
}

bool PipelineConfig::get_bool(const std::string& key) const {
    std::string v = get_string(key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail("config key '" + key + "': '" + v + "' is not a boolean");
}

void PipelineConfig::override_seed(uint64_t seed) {
    const std::string s = std::to_string(seed);
    values_["sampler.seed"] = s;
    values_["distort.seed"] = s;
    values_["train.seed"] = s;
    values_["protocol.seed"] = s;
}

SamplerConfig PipelineConfig::sampler() const {
    SamplerConfig c;
    if (has("sampler.n")) c.n = static_cast<size_t>(get_int("sampler.n"));
    if (has("sampler.s")) c.s = static_cast<size_t>(get_int("sampler.s"));
    if (has("sampler.seed")) c.seed = static_cast<uint64_t>(get_int("sampler.seed"));
    if (has("sampler.two_scale")) c.two_scale = get_bool("sampler.two_scale");
    if (has("sampler.downsample_factor"))
        c.downsample_factor = static_cast<int>(get_int("sampler.downsample_factor"));
    c.validate();
    return c;
}

RenderConfig PipelineConfig::render() const {
    RenderConfig c;
    if (has("render.height")) c.height = static_cast<int>(get_int("render.height"));
    if (has("render.width")) c.width = static_cast<int>(get_int("render.width"));
    if (has("render.projection")) {
        const std::string p = get_string("render.projection");
        if (p == "perspective") c.projection = Projection::Perspective;
        else if (p == "orthographic") c.projection = Projection::Orthographic;
        else fail("render.projection must be perspective or orthographic");
    }
    if (has("render.camera_distance")) c.camera_distance = get_double("render.camera_distance");
    if (has("render.point_size")) c.point_size = get_double("render.point_size");
    if (has("render.fov_y")) c.fov_y_deg = get_double("render.fov_y");
    if (has("render.ortho_half_extent"))
        c.ortho_half_extent = get_double("render.ortho_half_extent");
    if (has("render.background")) {
        std::istringstream ss(get_string("render.background"));
        int r, g, b;
        char c1, c2;
        if (!(ss >> r >> c1 >> g >> c2 >> b) || c1 != ',' || c2 != ',')
            fail("render.background must be r,g,b");
        c.background = {uint8_t(r), uint8_t(g), uint8_t(b)};
    }
    c.validate();
    return c;
}

MosRange PipelineConfig::mos_range() const {
    MosRange r;
    if (has("mos.lo")) r.lo = get_double("mos.lo");
    if (has("mos.hi")) r.hi = get_double("mos.hi");
    r.validate();
    return r;
}

PromptContexts PipelineConfig::prompt_contexts() const {
    PromptContexts c;
    if (has("prompt.setup_text")) c.setup_text = get_string("prompt.setup_text");
    if (has("prompt.render_text")) c.render_text = get_string("prompt.render_text");
    return c;
}

LocalizationSetOptions PipelineConfig::localization() const {
    LocalizationSetOptions o;
    if (has("distort.draws_per_cloud"))
        o.draws_per_cloud = static_cast<size_t>(get_int("distort.draws_per_cloud"));
    if (has("distort.seed")) o.seed = static_cast<uint64_t>(get_int("distort.seed"));
    if (has("distort.severity_levels")) {
        o.severity_levels.clear();
        std::istringstream ss(get_string("distort.severity_levels"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const int lvl = std::stoi(tok);
            require(lvl >= 1 && lvl <= 7, "distort.severity_levels entries must be in [1,7]");
            o.severity_levels.push_back(lvl);
        }
        require(!o.severity_levels.empty(), "distort.severity_levels is empty");
    }
    return o;
}

toy::ToyDims PipelineConfig::toy_dims() const {
    toy::ToyDims d;
    if (has("toy.s")) d.s = static_cast<int>(get_int("toy.s"));
    if (has("toy.n")) d.n_toy = static_cast<int>(get_int("toy.n"));
    if (has("toy.m")) d.m = static_cast<int>(get_int("toy.m"));
    if (has("toy.c")) d.c = static_cast<int>(get_int("toy.c"));
    if (has("toy.c_prime")) d.c_prime = static_cast<int>(get_int("toy.c_prime"));
    if (has("toy.t")) d.t = static_cast<int>(get_int("toy.t"));
    if (has("toy.layers")) d.layers = static_cast<int>(get_int("toy.layers"));
    if (has("toy.heads")) d.heads = static_cast<int>(get_int("toy.heads"));
    if (has("toy.vocab")) d.vocab = static_cast<int>(get_int("toy.vocab"));
    if (has("toy.context")) d.context = static_cast<int>(get_int("toy.context"));
    if (has("toy.rank")) d.rank = static_cast<int>(get_int("toy.rank"));
    if (has("toy.alpha")) d.alpha = get_double("toy.alpha");
    if (has("toy.pool_patches")) d.pool_patches = get_bool("toy.pool_patches");
    d.validate();
    return d;
}

toy::TrainConfig PipelineConfig::train() const {
    toy::TrainConfig c;
    if (has("train.stage")) c.stage = static_cast<int>(get_int("train.stage"));
    if (has("train.epochs")) c.epochs = static_cast<int>(get_int("train.epochs"));
    if (has("train.batch_size")) c.batch_size = static_cast<int>(get_int("train.batch_size"));
    if (has("train.lr")) c.lr = get_double("train.lr");
    if (has("train.momentum")) c.momentum = get_double("train.momentum");
    if (has("train.warmup_frac")) c.warmup_frac = get_double("train.warmup_frac");
    if (has("train.seed")) c.seed = static_cast<uint64_t>(get_int("train.seed"));
    if (has("train.adam")) c.adam = get_bool("train.adam");
    return c;
}

ProtocolOptions PipelineConfig::protocol() const {
    ProtocolOptions o;
    if (has("protocol.n_seeds")) o.n_seeds = static_cast<int>(get_int("protocol.n_seeds"));
    if (has("protocol.seed")) o.seed_base = static_cast<uint64_t>(get_int("protocol.seed"));
    if (has("protocol.plcc_fit")) {
        const std::string f = get_string("protocol.plcc_fit");
        if (f == "none") o.plcc_fit = PlccFit::None;
        else if (f == "logistic4") o.plcc_fit = PlccFit::Logistic4;
        else fail("protocol.plcc_fit must be none or logistic4");
    }
    return o;
}

int PipelineConfig::protocol_splits() const {
    return has("protocol.n_splits") ? static_cast<int>(get_int("protocol.n_splits")) : 5;
}

}  // namespace pcqa
