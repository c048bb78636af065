// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// pcqa: batch front end for the point-cloud quality toolkit. One binary,
// one config schema; every subcommand takes --config and --seed and all
// randomness flows from there.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "pcqa/config.hpp"
#include "pcqa/distort.hpp"
#include "pcqa/labels.hpp"
#include "pcqa/manifest.hpp"
#include "pcqa/metrics.hpp"
#include "pcqa/ply_io.hpp"
#include "pcqa/raster.hpp"
#include "pcqa/sampling.hpp"
#include "pcqa/toy/data.hpp"
#include "pcqa/toy/train.hpp"

namespace fs = std::filesystem;
using namespace pcqa;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_thread_env() {
    if (const char* env = std::getenv("PCQA_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

PipelineConfig load_config(const std::string& path, int64_t seed_override) {
    PipelineConfig cfg = path.empty() ? PipelineConfig() : PipelineConfig::load(path);
    if (seed_override >= 0) cfg.override_seed(static_cast<uint64_t>(seed_override));
    return cfg;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const std::string& manifest_path, const std::string& config_path,
                   const std::string& out_dir, bool force, const std::string& mode,
                   int64_t seed_override) {
    const PipelineConfig cfg = load_config(config_path, seed_override);
    const SamplerConfig scfg = cfg.sampler();
    const RenderConfig rcfg = cfg.render();

    auto records = load_manifest(manifest_path);
    fs::create_directories(fs::path(out_dir) / "views");
    fs::create_directories(fs::path(out_dir) / "patches");

    int failures = 0;
    double t_norm = 0, t_sample = 0, t_render = 0, t_io = 0;
    int done = 0, skipped = 0;

    for (size_t idx = 0; idx < records.size(); ++idx) {
        SampleRecord& rec = records[idx];
        const std::string stem = fs::path(rec.cloud_path).stem().string();
        const std::string patch_base = (fs::path(out_dir) / "patches" / stem).string();
        std::vector<std::string> view_paths;
        for (int v = 0; v < 6; ++v)
            view_paths.push_back((fs::path(out_dir) / "views" / view_png_name(stem, v)).string());

        bool exists = fs::exists(patch_base + ".bin") && fs::exists(patch_base + ".json");
        for (const auto& vp : view_paths) exists = exists && fs::exists(vp);
        if (exists && !force) {
            rec.view_paths = view_paths;
            rec.patch_path = patch_base;
            ++skipped;
            continue;
        }

        try {
            const PointCloud cloud = load_ply(rec.cloud_path);

            auto t0 = std::chrono::steady_clock::now();
            const NormalizedCloud norm = normalize(cloud);
            t_norm += seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            PatchSet patches;
            if (mode == "octant-cover") {
                patches = octant_cover_patches(norm, scfg.n);
            } else if (mode == "two-scale" || scfg.two_scale) {
                patches = sample_two_scale(norm, scfg);
            } else {
                patches = sample_patches(norm, scfg);
            }
            t_sample += seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            const auto views = render_views(norm, rcfg);
            t_render += seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            save_patchset(patches, patch_base);
            for (int v = 0; v < 6; ++v) write_png(views[v].image, view_paths[v]);
            t_io += seconds_since(t0);

            rec.view_paths = view_paths;
            rec.patch_path = patch_base;
            ++done;
        } catch (const std::exception& e) {
            std::cerr << "error: sample '" << rec.content_id << "': " << e.what() << "\n";
            ++failures;
        }
    }

    save_manifest(records, (fs::path(out_dir) / "manifest.jsonl").string());
    std::cout << "preprocess: " << done << " processed, " << skipped << " skipped, "
              << failures << " failed\n";
    std::cout << "timing: normalize " << t_norm << "s, sample " << t_sample
              << "s, render " << t_render << "s, io " << t_io << "s\n";
    return failures == 0 ? 0 : 1;
}

int cmd_distort(const std::string& in_path, const std::string& out_path,
                const std::string& type, int severity, int64_t seed) {
    const PointCloud cloud = load_ply(in_path);
    const PointCloud out =
        apply_distortion(cloud, distortion_type_from_string(type), Severity{severity},
                         seed >= 0 ? uint64_t(seed) : 0);
    save_ply(out, out_path, PlyEncoding::BinaryLittleEndian);
    std::cout << "distort: " << in_path << " -> " << out_path << " (" << type
              << " level " << severity << ")\n";
    return 0;
}

int cmd_make_loc_set(const std::string& manifest_path, const std::string& config_path,
                     const std::string& out_dir, int64_t draws, int64_t seed_override) {
    const PipelineConfig cfg = load_config(config_path, seed_override);
    LocalizationSetOptions opts = cfg.localization();
    if (draws > 0) opts.draws_per_cloud = static_cast<size_t>(draws);

    std::vector<std::pair<std::string, PointCloud>> pristine;
    for (const auto& rec : load_manifest(manifest_path))
        pristine.emplace_back(rec.content_id, load_ply(rec.cloud_path));

    const auto rows = build_localization_set(pristine, opts, out_dir, [](const std::string& msg) {
        std::cerr << "note: " << msg << "\n";
    });
    save_localization_manifest(rows, (fs::path(out_dir) / "localization.jsonl").string());
    std::cout << "make-loc-set: " << rows.size() << " samples in " << out_dir << "\n";
    return 0;
}

int cmd_build_instructions(const std::string& manifest_path, const std::string& config_path,
                           const std::string& out_path, int64_t seed_override) {
    const PipelineConfig cfg = load_config(config_path, seed_override);
    const auto records = load_manifest(manifest_path);
    const auto dataset =
        build_instruction_dataset(records, cfg.mos_range(), cfg.prompt_contexts());
    save_instruction_dataset(dataset, out_path);
    std::cout << "build-instructions: " << dataset.size() << " rows -> " << out_path << "\n";
    return 0;
}

int cmd_train_toy(const std::string& data_path, const std::string& config_path,
                  int stage, const std::string& out_path, const std::string& init_path,
                  int64_t captions, const std::string& curve_path, int64_t seed_override) {
    const PipelineConfig cfg = load_config(config_path, seed_override);
    const toy::ToyDims dims = cfg.toy_dims();
    toy::TrainConfig tcfg = cfg.train();
    tcfg.stage = stage;
    tcfg.curve_path = curve_path;

    std::unique_ptr<toy::FusionModel> model;
    if (!init_path.empty()) {
        model = toy::FusionModel::load_checkpoint(init_path);
    } else {
        model = std::make_unique<toy::FusionModel>(dims, tcfg.seed);
    }

    std::vector<toy::ToySample> dataset;
    if (stage == 1) {
        dataset = toy::make_caption_dataset(model->dims(), size_t(captions), tcfg.seed);
        std::cout << "train-toy: stage 1 on " << dataset.size() << " synthetic captions\n";
    } else {
        require(!data_path.empty(), "train-toy: --data is required for stage 2");
        const auto insts = load_instruction_dataset(data_path);
        for (const auto& inst : insts)
            dataset.push_back(toy::tensorize_instruction(inst, model->dims(), model->tokenizer()));
        std::cout << "train-toy: stage 2 on " << dataset.size() << " instruction samples\n";
    }

    const toy::TrainResult result = toy::train(*model, dataset, tcfg);
    model->save_checkpoint(out_path, stage);
    std::cout << "train-toy: final loss " << result.epoch_loss.back() << ", answer accuracy "
              << result.epoch_accuracy.back() << ", checkpoint " << out_path << "\n";
    return 0;
}

/// Protocol runner backed by the toy fusion model; retrains per split and
/// re-samples patches per sampling seed.
class ToyRunner : public ProtocolRunner {
public:
    ToyRunner(const PipelineConfig& cfg) : cfg_(cfg) {}

    void train(const std::vector<SampleRecord>& train_set, int split_id) override {
        const toy::ToyDims dims = cfg_.toy_dims();
        toy::TrainConfig tcfg = cfg_.train();
        model_ = std::make_unique<toy::FusionModel>(
            dims, Rng::mix(tcfg.seed, uint64_t(split_id)));
        std::vector<toy::ToySample> data;
        const MosRange range = cfg_.mos_range();
        const PromptContexts ctx = cfg_.prompt_contexts();
        for (const auto& rec : train_set) {
            const PointCloud cloud = load_ply(rec.cloud_path);
            data.push_back(toy::tensorize_from_cloud(
                cloud, dims, model_->tokenizer(), cfg_.sampler().seed, cfg_.render(), ctx,
                answer_text(discretize(rec.mos, range))));
        }
        toy::train(*model_, data, tcfg);
    }

    double predict(const SampleRecord& rec, uint64_t sampling_seed) override {
        const PointCloud cloud = load_ply(rec.cloud_path);
        const toy::ToySample sample = toy::tensorize_from_cloud(
            cloud, model_->dims(), model_->tokenizer(), sampling_seed, cfg_.render(),
            cfg_.prompt_contexts(), "");
        return model_->predict_score(sample);
    }

private:
    PipelineConfig cfg_;
    std::unique_ptr<toy::FusionModel> model_;
};

int cmd_eval(const std::string& manifest_path, const std::string& config_path,
             const std::string& out_path, const std::string& csv_path,
             int64_t seed_override) {
    const PipelineConfig cfg = load_config(config_path, seed_override);
    const auto records = load_manifest(manifest_path);
    const auto plans =
        make_splits(records, cfg.protocol_splits(), cfg.protocol().seed_base);
    ToyRunner runner(cfg);
    const MetricReport report = run_protocol(runner, records, plans, cfg.protocol());

    std::ofstream out(out_path);
    require(bool(out), out_path + ": cannot open for writing");
    out << report.to_json() << "\n";
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        require(bool(csv), csv_path + ": cannot open for writing");
        csv << report.to_csv();
    }
    std::cout << "eval: srocc " << report.srocc_mean << " plcc " << report.plcc_mean
              << " (report " << out_path << ")\n";
    return report.ok() ? 0 : 1;
}

int cmd_metrics(const std::string& pred_path, const std::string& out_path,
                const std::string& plcc_fit) {
    std::ifstream in(pred_path);
    require(bool(in), pred_path + ": cannot open predictions CSV");
    std::string header;
    require(bool(std::getline(in, header)), pred_path + ": empty file");

    const PlccFit fit = (plcc_fit == "logistic4") ? PlccFit::Logistic4 : PlccFit::None;
    std::vector<double> preds, targets;
    std::string line;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        require(bool(std::getline(ss, a, ',')) && bool(std::getline(ss, b, ',')),
                pred_path + ":" + std::to_string(lineno) + ": expected pred,mos");
        preds.push_back(std::stod(a));
        targets.push_back(std::stod(b));
    }

    const Correlation s = srocc(preds, targets);
    const PlccResult p = plcc(preds, targets, fit);
    nlohmann::json j;
    j["n"] = preds.size();
    j["srocc"] = s.defined ? nlohmann::json(s.value) : nlohmann::json();
    j["plcc"] = p.corr.defined ? nlohmann::json(p.corr.value) : nlohmann::json();
    j["plcc_fit"] = (fit == PlccFit::Logistic4) ? "logistic4" : "none";
    j["plcc_fit_fell_back"] = p.fit_fell_back;

    std::ofstream out(out_path);
    require(bool(out), out_path + ": cannot open for writing");
    out << j.dump(2) << "\n";
    std::cout << "metrics: srocc " << (s.defined ? std::to_string(s.value) : "undefined")
              << " plcc " << (p.corr.defined ? std::to_string(p.corr.value) : "undefined")
              << "\n";
    return (s.defined && p.corr.defined) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();

    CLI::App app{"Point-cloud quality assessment toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "pcqa 0.1.0");

    std::string manifest, config, out, mode = "default", in_path, type = "geom-gauss";
    std::string data_path, init_path, curve_path, csv_path, pred_path, plcc_fit = "none";
    bool force = false;
    int severity = 4, stage = 2;
    int64_t seed = -1, draws = -1, captions = 64;

    auto* pre = app.add_subcommand("preprocess", "normalize, sample patches and render views");
    pre->add_option("--manifest", manifest, "input JSONL manifest")->required();
    pre->add_option("--config", config, "pipeline config file");
    pre->add_option("--out", out, "output directory")->required();
    pre->add_option("--mode", mode, "default | two-scale | octant-cover")
        ->check(CLI::IsMember({"default", "two-scale", "octant-cover"}));
    pre->add_flag("--force", force, "recompute even if outputs exist");
    pre->add_option("--seed", seed, "override every config seed");

    auto* dis = app.add_subcommand("distort", "apply one distortion to a PLY");
    dis->add_option("--in", in_path, "input PLY")->required();
    dis->add_option("--out", out, "output PLY")->required();
    dis->add_option("--type", type, "distortion type")->required();
    dis->add_option("--severity", severity, "severity level 1..7")->required();
    dis->add_option("--seed", seed, "noise seed");

    auto* loc = app.add_subcommand("make-loc-set", "generate the octant localization set");
    loc->add_option("--manifest", manifest, "pristine manifest JSONL")->required();
    loc->add_option("--config", config, "pipeline config file");
    loc->add_option("--out", out, "output directory")->required();
    loc->add_option("--draws", draws, "samples per pristine cloud");
    loc->add_option("--seed", seed, "override every config seed");

    auto* ins = app.add_subcommand("build-instructions", "emit instruction JSONL");
    ins->add_option("--manifest", manifest, "preprocessed manifest JSONL")->required();
    ins->add_option("--config", config, "pipeline config file");
    ins->add_option("--out", out, "output JSONL path")->required();
    ins->add_option("--seed", seed, "override every config seed");

    auto* trn = app.add_subcommand("train-toy", "train the toy fusion model");
    trn->add_option("--data", data_path, "instruction JSONL (stage 2)");
    trn->add_option("--config", config, "pipeline config file");
    trn->add_option("--stage", stage, "1 = alignment, 2 = instruction tuning")->required();
    trn->add_option("--out", out, "checkpoint output path")->required();
    trn->add_option("--init", init_path, "initial checkpoint (stage chaining)");
    trn->add_option("--captions", captions, "synthetic caption count for stage 1");
    trn->add_option("--curve", curve_path, "loss-curve CSV output");
    trn->add_option("--seed", seed, "override every config seed");

    auto* ev = app.add_subcommand("eval", "run the split/seed evaluation protocol");
    ev->add_option("--manifest", manifest, "dataset manifest JSONL")->required();
    ev->add_option("--config", config, "pipeline config file");
    ev->add_option("--out", out, "JSON report path")->required();
    ev->add_option("--csv", csv_path, "CSV summary path");
    ev->add_option("--seed", seed, "override every config seed");

    auto* met = app.add_subcommand("metrics", "correlations from a predictions CSV");
    met->add_option("--pred", pred_path, "CSV with header and pred,mos rows")->required();
    met->add_option("--out", out, "JSON report path")->required();
    met->add_option("--plcc-fit", plcc_fit, "none | logistic4")
        ->check(CLI::IsMember({"none", "logistic4"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion" ? 0 : 2;
    }

    try {
        if (pre->parsed())
            return cmd_preprocess(manifest, config, out, force, mode, seed);
        if (dis->parsed()) return cmd_distort(in_path, out, type, severity, seed);
        if (loc->parsed()) return cmd_make_loc_set(manifest, config, out, draws, seed);
        if (ins->parsed()) return cmd_build_instructions(manifest, config, out, seed);
        if (trn->parsed())
            return cmd_train_toy(data_path, config, stage, out, init_path, captions,
                                 curve_path, seed);
        if (ev->parsed()) return cmd_eval(manifest, config, out, csv_path, seed);
        if (met->parsed()) return cmd_metrics(pred_path, out, plcc_fit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
