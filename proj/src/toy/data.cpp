// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/toy/data.hpp"

#include <cmath>

#include "pcqa/rng.hpp"

namespace pcqa::toy {

namespace {

struct Palette {
    const char* name;
    uint8_t rgb[3];
};

const Palette kPalette[kNumColors] = {
    {"red", {220, 40, 40}},   {"green", {40, 200, 60}},  {"blue", {50, 80, 220}},
    {"yellow", {230, 220, 50}}, {"gray", {128, 128, 128}}, {"white", {240, 240, 240}},
};

const char* kShapeNames[kNumShapes] = {"sphere", "cube", "torus", "blob", "cylinder"};

constexpr double kTau = 6.283185307179586477;

Mat patch_to_matrix(const PatchSet& ps, size_t p, int n_rows) {
    Mat out(n_rows, ToyDims::d);
    const double* src = ps.patch(p);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < ToyDims::d; ++j) out(i, j) = src[i * ToyDims::d + j];
    return out;
}

}  // namespace

const char* shape_name(int shape_id) {
    require(shape_id >= 0 && shape_id < kNumShapes, "shape id out of range");
    return kShapeNames[shape_id];
}

const char* color_name(int color_id) {
    require(color_id >= 0 && color_id < kNumColors, "color id out of range");
    return kPalette[color_id].name;
}

PointCloud make_shape_cloud(int shape_id, int color_id, double size, size_t n,
                            uint64_t seed) {
    require(shape_id >= 0 && shape_id < kNumShapes, "shape id out of range");
    require(color_id >= 0 && color_id < kNumColors, "color id out of range");
    require(n >= 8, "shape cloud needs at least 8 points");

    Rng rng(seed, "shape", uint64_t(shape_id) * 131 + uint64_t(color_id));
    PointCloud cloud;
    cloud.source_id = std::string(kShapeNames[shape_id]) + "-" + kPalette[color_id].name;
    cloud.positions.resize(3 * n);
    cloud.colors.resize(3 * n);

    for (size_t i = 0; i < n; ++i) {
        double x = 0, y = 0, z = 0;
        switch (shape_id) {
            case 0: {  // sphere surface
                const double u = rng.uniform(-1.0, 1.0);
                const double phi = rng.uniform(0.0, kTau);
                const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
                x = size * r * std::cos(phi);
                y = size * r * std::sin(phi);
                z = size * u;
                break;
            }
            case 1: {  // cube volume
                x = size * rng.uniform(-1.0, 1.0);
                y = size * rng.uniform(-1.0, 1.0);
                z = size * rng.uniform(-1.0, 1.0);
                break;
            }
            case 2: {  // torus
                const double a = rng.uniform(0.0, kTau);
                const double b = rng.uniform(0.0, kTau);
                const double R = 0.7 * size, r = 0.25 * size;
                x = (R + r * std::cos(b)) * std::cos(a);
                y = (R + r * std::cos(b)) * std::sin(a);
                z = r * std::sin(b);
                break;
            }
            case 3: {  // gaussian blob
                x = 0.45 * size * rng.normal();
                y = 0.45 * size * rng.normal();
                z = 0.45 * size * rng.normal();
                break;
            }
            default: {  // cylinder surface
                const double a = rng.uniform(0.0, kTau);
                x = 0.5 * size * std::cos(a);
                y = 0.5 * size * std::sin(a);
                z = size * rng.uniform(-1.0, 1.0);
                break;
            }
        }
        cloud.positions[3 * i + 0] = x;
        cloud.positions[3 * i + 1] = y;
        cloud.positions[3 * i + 2] = z;
        for (int ch = 0; ch < 3; ++ch) {
            const double jitter = rng.uniform(-10.0, 10.0);
            cloud.colors[3 * i + ch] = static_cast<uint8_t>(
                std::clamp(double(kPalette[color_id].rgb[ch]) + jitter, 0.0, 255.0));
        }
    }
    return cloud;
}

void tokenize_prompt(const Tokenizer& tk, const std::string& prompt,
                     std::vector<int>& prefix, std::vector<int>& suffix) {
    const size_t img = prompt.find(kImagePlaceholder);
    const size_t pend = prompt.rfind(kPointEnd);
    require(img != std::string::npos && pend != std::string::npos,
            "tokenize_prompt: prompt lacks the placeholder block");
    prefix = tk.encode_words(prompt.substr(0, img));
    suffix = tk.encode_words(prompt.substr(pend + std::string(kPointEnd).size()));
}

std::vector<ToySample> make_caption_dataset(const ToyDims& dims, size_t count,
                                            uint64_t seed) {
    std::vector<ToySample> out;
    out.reserve(count);
    const Tokenizer tk(dims.vocab);
    for (size_t i = 0; i < count; ++i) {
        Rng rng(seed, "caption", i);
        const int shape = static_cast<int>(rng.uniform_index(kNumShapes));
        const int color = static_cast<int>(rng.uniform_index(kNumColors));
        const bool small = rng.uniform() < 0.5;
        const double size = small ? 0.45 : 0.95;

        const PointCloud cloud =
            make_shape_cloud(shape, color, size, size_t(dims.n_toy), rng.next_u64());
        const NormalizedCloud norm = normalize(cloud);

        ToySample s;
        Mat patch(dims.n_toy, ToyDims::d);
        for (int p = 0; p < dims.n_toy; ++p) {
            const double* q = norm.point(p);
            const uint8_t* c = norm.color(p);
            patch(p, 0) = q[0];
            patch(p, 1) = q[1];
            patch(p, 2) = q[2];
            patch(p, 3) = c[0] / 255.0;
            patch(p, 4) = c[1] / 255.0;
            patch(p, 5) = c[2] / 255.0;
        }
        s.patches.push_back(std::move(patch));
        s.suffix_tokens = tk.encode_words("describe the object shown");
        s.answer_tokens = tk.encode_words(std::string("a ") + (small ? "small" : "large") +
                                          " " + kPalette[color].name + " " +
                                          kShapeNames[shape]);
        out.push_back(std::move(s));
    }
    return out;
}

QualitySet make_quality_dataset(const ToyDims& dims, size_t count, uint64_t seed) {
    QualitySet set;
    const Tokenizer tk(dims.vocab);
    const std::string prompt = assemble_prompt("", "");
    std::vector<int> prefix, suffix;
    tokenize_prompt(tk, prompt, prefix, suffix);

    RenderConfig rcfg;
    rcfg.height = 64;
    rcfg.width = 64;

    // quality level -> distortion severity of the geometry/color ladder
    const int level_to_severity[5] = {7, 6, 4, 3, 1};  // bad .. excellent

    for (size_t i = 0; i < count; ++i) {
        Rng rng(seed, "quality", i);
        const int shape = static_cast<int>(rng.uniform_index(kNumShapes));
        const int color = static_cast<int>(rng.uniform_index(kNumColors));
        const int level = static_cast<int>(i % 5) + 1;  // balanced levels
        const double mos = 1.4 + 0.8 * double(level - 1);

        const size_t n_base = size_t(dims.n_toy) * 4;
        PointCloud cloud = make_shape_cloud(shape, color, 0.8, n_base, rng.next_u64());
        // alternate noise families so content varies
        const DistortionType dtype =
            (i % 2 == 0) ? DistortionType::GeomGauss : DistortionType::ColorGauss;
        if (level < 5) {
            cloud = apply_distortion(cloud, dtype,
                                     Severity{level_to_severity[level - 1]}, rng.next_u64());
        }
        const NormalizedCloud norm = normalize(cloud);

        SamplerConfig scfg;
        scfg.n = size_t(dims.n_toy);
        scfg.s = size_t(dims.s);
        scfg.seed = rng.next_u64();
        const PatchSet ps = sample_patches(norm, scfg);
        const auto views = render_views(norm, rcfg);

        ToySample s;
        for (size_t p = 0; p < ps.s; ++p)
            s.patches.push_back(patch_to_matrix(ps, p, dims.n_toy));
        s.views.reserve(6);
        for (const auto& v : views) s.views.push_back(v.image);
        s.prefix_tokens = prefix;
        s.suffix_tokens = suffix;
        s.answer_tokens = tk.encode_words(answer_text(discretize(mos, set.range)));

        set.samples.push_back(std::move(s));
        set.mos.push_back(mos);
    }
    return set;
}

LocalizationBenchmark make_localization_benchmark(const ToyDims& dims, size_t count,
                                                  uint64_t seed,
                                                  const std::vector<int>& severity_pool) {
    require(!severity_pool.empty(), "localization benchmark: empty severity pool");
    LocalizationBenchmark bench;
    const Tokenizer tk(dims.vocab);

    const std::string prompt =
        "This is a point cloud with a localized distortion. " +
        std::string("{IMG}{IMG}{IMG}{IMG}{IMG}{IMG}") + kPointStart + kPointPlaceholder +
        kPointEnd + " Which octant is distorted and what is the distortion type?";
    std::vector<int> prefix, suffix;
    tokenize_prompt(tk, prompt, prefix, suffix);

    RenderConfig rcfg;
    rcfg.height = 64;
    rcfg.width = 64;

    for (size_t i = 0; i < count; ++i) {
        Rng rng(seed, "locbench", i);
        const int shape = static_cast<int>(rng.uniform_index(kNumShapes));
        const int color = static_cast<int>(rng.uniform_index(kNumColors));
        const size_t n_base = 2048;
        const PointCloud pristine =
            make_shape_cloud(shape, color, 0.8, n_base, rng.next_u64());

        // draw an octant that is actually occupied
        const auto center = centroid_of(pristine);
        std::array<bool, 8> occupied{};
        for (size_t p = 0; p < pristine.size(); ++p)
            occupied[octant_of(pristine.point(p), center.data())] = true;
        std::vector<int> pool;
        for (int o = 0; o < 8; ++o)
            if (occupied[o]) pool.push_back(o);

        const int octant = pool[rng.uniform_index(pool.size())];
        const int dtype_i = static_cast<int>(rng.uniform_index(kNumDistortionTypes));
        const int level = severity_pool[rng.uniform_index(severity_pool.size())];

        const LocalizationSample loc = make_localization_sample(
            pristine, octant, static_cast<DistortionType>(dtype_i), Severity{level},
            rng.next_u64());

        const NormalizedCloud norm = normalize(loc.cloud);
        const PatchSet ps = octant_cover_patches(norm, size_t(dims.n_toy));
        const auto views = render_views(norm, rcfg);

        ToySample s;
        for (size_t p = 0; p < ps.s; ++p)
            s.patches.push_back(patch_to_matrix(ps, p, dims.n_toy));
        s.views.reserve(6);
        for (const auto& v : views) s.views.push_back(v.image);
        s.prefix_tokens = prefix;
        s.suffix_tokens = suffix;
        s.answer_tokens = {Tokenizer::octant_id(octant), Tokenizer::type_id(dtype_i)};

        bench.samples.push_back(std::move(s));
        bench.octants.push_back(octant);
        bench.dtypes.push_back(dtype_i);
    }
    return bench;
}

ToySample tensorize_instruction(const InstructionSample& inst, const ToyDims& dims,
                                const Tokenizer& tk) {
    const PatchSet ps = load_patchset(inst.patch_path);
    require(ps.n >= size_t(dims.n_toy),
            "tensorize: patch tensor has " + std::to_string(ps.n) +
                " points, toy model needs " + std::to_string(dims.n_toy));

    ToySample s;
    for (size_t p = 0; p < ps.s; ++p) s.patches.push_back(patch_to_matrix(ps, p, dims.n_toy));
    require(inst.view_paths.size() == 6, "tensorize: expected 6 view paths");
    s.views.reserve(6);
    for (const auto& path : inst.view_paths) s.views.push_back(read_png(path));
    tokenize_prompt(tk, inst.prompt, s.prefix_tokens, s.suffix_tokens);
    s.answer_tokens = tk.encode_words(inst.answer);
    return s;
}

ToySample tensorize_from_cloud(const PointCloud& cloud, const ToyDims& dims,
                               const Tokenizer& tk, uint64_t sampling_seed,
                               const RenderConfig& render_cfg,
                               const PromptContexts& contexts,
                               const std::string& answer) {
    const NormalizedCloud norm = normalize(cloud);
    SamplerConfig scfg;
    scfg.n = size_t(dims.n_toy);
    scfg.s = size_t(dims.s);
    scfg.seed = sampling_seed;
    const PatchSet ps = sample_patches(norm, scfg);
    const auto views = render_views(norm, render_cfg);

    ToySample s;
    for (size_t p = 0; p < ps.s; ++p) s.patches.push_back(patch_to_matrix(ps, p, dims.n_toy));
    s.views.reserve(6);
    for (const auto& v : views) s.views.push_back(v.image);
    tokenize_prompt(tk, assemble_prompt(contexts.setup_text, contexts.render_text),
                    s.prefix_tokens, s.suffix_tokens);
    if (!answer.empty()) s.answer_tokens = tk.encode_words(answer);
    return s;
}

}  // namespace pcqa::toy
