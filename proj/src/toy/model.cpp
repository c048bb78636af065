// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/toy/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pcqa/labels.hpp"

namespace pcqa::toy {

using nlohmann::json;

namespace {

void init_normal(Param& p, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < p.w.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w.cols(); ++j) p.w(i, j) = stddev * rng.normal();
}

ImageRGB downsample_to(const ImageRGB& img, int side) {
    require(img.height % side == 0 && img.width % side == 0,
            "image encoder: view dimensions must be divisible by " + std::to_string(side));
    const int bh = img.height / side, bw = img.width / side;
    ImageRGB out;
    out.height = side;
    out.width = side;
    out.pixels.resize(size_t(side) * side * 3);
    for (int r = 0; r < side; ++r) {
        for (int cidx = 0; cidx < side; ++cidx) {
            double acc[3] = {0, 0, 0};
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) {
                    const uint8_t* p = img.at(r * bh + y, cidx * bw + x);
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            const double inv = 1.0 / double(bh * bw);
            uint8_t* q = out.at(r, cidx);
            q[0] = static_cast<uint8_t>(std::lround(acc[0] * inv));
            q[1] = static_cast<uint8_t>(std::lround(acc[1] * inv));
            q[2] = static_cast<uint8_t>(std::lround(acc[2] * inv));
        }
    }
    return out;
}

}  // namespace

struct FusionModel::SeqCache {
    SequenceInfo info;
    std::vector<PointEncoder::Cache> pe;
    Projector::Cache proj;
    Mat point_feats;            // stacked s*m x c
    bool pooled = false;
    Linear::Cache img;
    Mat cell_feats;             // 6t x 5
    std::vector<Block::Cache> blk;
    LayerNorm::Cache lnf;
    Linear::Cache head_cache;
    Mat E;                      // n' x c'
    int point_rows = 0;         // tokens contributed by the point path
    int image_rows = 0;
};

FusionModel::FusionModel(const ToyDims& dims, uint64_t seed)
    : dims_(dims), tokenizer_(dims.vocab) {
    dims_.validate();
    init_seed = seed;
    Rng rng(seed, "fusion-init");

    point_encoder.init("point", dims_, rng);
    projector.init("proj", dims_.c_prime, dims_.c, rng);
    image_cell.init("img.cell", dims_.c_prime, 5, rng);
    view_emb.init("img.view_emb", 6, dims_.c_prime);
    init_normal(view_emb, rng, 0.1);
    token_emb.init("lm.tok_emb", dims_.vocab, dims_.c_prime);
    init_normal(token_emb, rng, 0.1);
    pos_emb.init("lm.pos_emb", dims_.context, dims_.c_prime);
    init_normal(pos_emb, rng, 0.05);
    seg_emb.init("lm.seg_emb", 4, dims_.c_prime);
    init_normal(seg_emb, rng, 0.05);

    blocks.resize(dims_.layers);
    for (int l = 0; l < dims_.layers; ++l)
        blocks[l].init("lm.block" + std::to_string(l), dims_.c_prime, dims_.heads,
                       dims_.rank, dims_.alpha, rng);
    ln_f.init("lm.ln_f", dims_.c_prime);
    head.init("lm.head", dims_.vocab, dims_.c_prime, rng);

    build_registry();
}

void FusionModel::build_registry() {
    registry_.clear();
    for (Param* p : point_encoder.params()) registry_.push_back(p);
    for (Param* p : projector.params()) registry_.push_back(p);
    for (Param* p : image_cell.params()) registry_.push_back(p);
    registry_.push_back(&view_emb);
    registry_.push_back(&token_emb);
    registry_.push_back(&pos_emb);
    registry_.push_back(&seg_emb);
    for (auto& blk : blocks)
        for (Param* p : blk.params()) registry_.push_back(p);
    for (Param* p : ln_f.params()) registry_.push_back(p);
    for (Param* p : head.params()) registry_.push_back(p);
}

Param* FusionModel::find_param(const std::string& name) {
    for (Param* p : registry_)
        if (p->name == name) return p;
    return nullptr;
}

void FusionModel::zero_grads() {
    for (Param* p : registry_) p->zero_grad();
}

void FusionModel::set_stage(int stage) {
    require(stage == 1 || stage == 2, "train stage must be 1 or 2");
    for (Param* p : registry_) p->trainable = false;
    for (Param* p : projector.params()) p->trainable = true;
    if (stage == 2) {
        for (Param* p : image_cell.params()) p->trainable = true;
        view_emb.trainable = true;
        // adapters only; base q/v weights and every other LM tensor stay frozen
        point_encoder.wq.A.trainable = point_encoder.wq.B.trainable = true;
        point_encoder.wv.A.trainable = point_encoder.wv.B.trainable = true;
        for (auto& blk : blocks) {
            blk.attn.wq.A.trainable = blk.attn.wq.B.trainable = true;
            blk.attn.wv.A.trainable = blk.attn.wv.B.trainable = true;
        }
    }
}

void FusionModel::set_all_trainable() {
    for (Param* p : registry_) p->trainable = true;
}

void FusionModel::zero_and_freeze_view_embeddings() {
    view_emb.w.setZero();
    view_emb.trainable = false;
}

Mat FusionModel::view_cell_features(const ImageRGB& view) const {
    const int g = static_cast<int>(std::lround(std::sqrt(double(dims_.t))));
    require(g * g == dims_.t, "image encoder: t must be a perfect square");
    const ImageRGB small = downsample_to(view, 32);
    require(32 % g == 0, "image encoder: grid must divide 32");
    const int cell = 32 / g;
    Mat feats(dims_.t, 5);
    for (int gy = 0; gy < g; ++gy) {
        for (int gx = 0; gx < g; ++gx) {
            double acc[3] = {0, 0, 0};
            for (int y = 0; y < cell; ++y)
                for (int x = 0; x < cell; ++x) {
                    const uint8_t* p = small.at(gy * cell + y, gx * cell + x);
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            const double inv = 1.0 / (255.0 * cell * cell);
            const int row = gy * g + gx;
            feats(row, 0) = acc[0] * inv;
            feats(row, 1) = acc[1] * inv;
            feats(row, 2) = acc[2] * inv;
            feats(row, 3) = (double(gx) + 0.5) / double(g) - 0.5;  // cell center x
            feats(row, 4) = (double(gy) + 0.5) / double(g) - 0.5;  // cell center y
        }
    }
    return feats;
}

void FusionModel::assemble(const ToySample& sample, SeqCache& cache) const {
    require(!sample.patches.empty(), "assemble: empty point segment is forbidden");
    for (const Mat& p : sample.patches)
        require(p.cols() == ToyDims::d, "assemble: patch feature dimension must be 6");
    const bool has_views = !sample.views.empty();
    if (has_views)
        require(sample.views.size() == 6, "assemble: expected exactly 6 views");

    const int s = static_cast<int>(sample.patches.size());

    // point path
    cache.pe.resize(s);
    Mat stacked(s * dims_.m, dims_.c);
    for (int p = 0; p < s; ++p)
        stacked.middleRows(p * dims_.m, dims_.m) =
            point_encoder.forward(sample.patches[p], cache.pe[p]);
    cache.point_feats = stacked;

    Mat point_tokens;
    cache.pooled = dims_.pool_patches;
    if (dims_.pool_patches) {
        Mat pooled(s, dims_.c);
        for (int p = 0; p < s; ++p)
            pooled.row(p) = stacked.middleRows(p * dims_.m, dims_.m).colwise().mean();
        point_tokens = projector.forward(pooled, cache.proj);
    } else {
        point_tokens = projector.forward(stacked, cache.proj);
    }
    cache.point_rows = static_cast<int>(point_tokens.rows());

    // image path
    Mat image_tokens;
    if (has_views) {
        cache.cell_feats.resize(6 * dims_.t, 5);
        for (int v = 0; v < 6; ++v)
            cache.cell_feats.middleRows(v * dims_.t, dims_.t) =
                view_cell_features(sample.views[v]);
        image_tokens = image_cell.forward(cache.cell_feats, cache.img);
        for (int v = 0; v < 6; ++v)
            image_tokens.middleRows(v * dims_.t, dims_.t).rowwise() +=
                view_emb.w.row(v);
    }
    cache.image_rows = static_cast<int>(image_tokens.rows());

    // sequence layout:
    // bos, prefix text, image tokens, <p_start>, point tokens, <p_end>,
    // suffix text, answer text
    const int n_text = 1 + int(sample.prefix_tokens.size()) + int(sample.suffix_tokens.size()) +
                       int(sample.answer_tokens.size());
    const int n_prime = n_text + cache.image_rows + 2 + cache.point_rows;
    require(n_prime <= dims_.context,
            "assemble: sequence length " + std::to_string(n_prime) +
                " exceeds context cap " + std::to_string(dims_.context));

    cache.info = SequenceInfo{};
    cache.info.n_prime = n_prime;
    cache.info.tags.assign(n_prime, int(SegTag::Text));
    cache.info.view_ids.assign(n_prime, -1);
    cache.info.token_ids.assign(n_prime, -1);
    cache.E.resize(n_prime, dims_.c_prime);

    int pos = 0;
    auto put_text = [&](int tok) {
        cache.E.row(pos) = token_emb.w.row(tok) + seg_emb.w.row(int(SegTag::Text)) +
                           pos_emb.w.row(pos);
        cache.info.tags[pos] = int(SegTag::Text);
        cache.info.token_ids[pos] = tok;
        ++pos;
    };

    put_text(Tokenizer::kBos);
    for (int tok : sample.prefix_tokens) put_text(tok);

    for (int r = 0; r < cache.image_rows; ++r) {
        cache.E.row(pos) = image_tokens.row(r) + seg_emb.w.row(int(SegTag::Image));
        cache.info.tags[pos] = int(SegTag::Image);
        cache.info.view_ids[pos] = r / dims_.t;
        ++pos;
    }

    cache.E.row(pos) = token_emb.w.row(Tokenizer::kPointStart) +
                       seg_emb.w.row(int(SegTag::Special));
    cache.info.tags[pos] = int(SegTag::Special);
    cache.info.token_ids[pos] = Tokenizer::kPointStart;
    ++pos;

    for (int r = 0; r < cache.point_rows; ++r) {
        cache.E.row(pos) = point_tokens.row(r) + seg_emb.w.row(int(SegTag::Point));
        cache.info.tags[pos] = int(SegTag::Point);
        ++pos;
    }

    cache.E.row(pos) = token_emb.w.row(Tokenizer::kPointEnd) +
                       seg_emb.w.row(int(SegTag::Special));
    cache.info.tags[pos] = int(SegTag::Special);
    cache.info.token_ids[pos] = Tokenizer::kPointEnd;
    ++pos;

    for (int tok : sample.suffix_tokens) put_text(tok);
    cache.info.answer_start = pos;
    for (int tok : sample.answer_tokens) put_text(tok);
    require(pos == n_prime, "assemble: layout bookkeeping mismatch");
}

Mat FusionModel::run_lm(SeqCache& cache) const {
    Mat h = cache.E;
    cache.blk.resize(blocks.size());
    for (size_t l = 0; l < blocks.size(); ++l) h = blocks[l].forward(h, cache.blk[l]);
    h = ln_f.forward(h, cache.lnf);
    return head.forward(h, cache.head_cache);
}

void FusionModel::backward(const Mat& dLogits, SeqCache& cache) {
    Mat dh = head.backward(dLogits, cache.head_cache);
    dh = ln_f.backward(dh, cache.lnf);
    for (size_t l = blocks.size(); l-- > 0;) dh = blocks[l].backward(dh, cache.blk[l]);

    // scatter embedding gradients
    Mat dPoint = Mat::Zero(cache.point_rows, dims_.c_prime);
    Mat dImage = Mat::Zero(std::max(cache.image_rows, 1), dims_.c_prime);
    int point_row = 0, image_row = 0;
    for (int i = 0; i < cache.info.n_prime; ++i) {
        const int tag = cache.info.tags[i];
        seg_emb.g.row(tag) += dh.row(i);
        if (tag == int(SegTag::Text)) {
            token_emb.g.row(cache.info.token_ids[i]) += dh.row(i);
            pos_emb.g.row(i) += dh.row(i);
        } else if (tag == int(SegTag::Special)) {
            token_emb.g.row(cache.info.token_ids[i]) += dh.row(i);
        } else if (tag == int(SegTag::Image)) {
            dImage.row(image_row++) = dh.row(i);
            view_emb.g.row(cache.info.view_ids[i]) += dh.row(i);
        } else {
            dPoint.row(point_row++) = dh.row(i);
        }
    }

    if (cache.image_rows > 0) image_cell.backward(dImage.topRows(cache.image_rows), cache.img);

    Mat dFeats = projector.backward(dPoint, cache.proj);
    const int s = static_cast<int>(cache.pe.size());
    if (cache.pooled) {
        // mean over the m feature rows of each patch
        Mat expanded(s * dims_.m, dims_.c);
        for (int p = 0; p < s; ++p)
            expanded.middleRows(p * dims_.m, dims_.m) =
                (Mat::Ones(dims_.m, 1) * dFeats.row(p)) / double(dims_.m);
        dFeats = expanded;
    }
    for (int p = 0; p < s; ++p)
        point_encoder.backward(dFeats.middleRows(p * dims_.m, dims_.m), cache.pe[p]);
}

ForwardStats FusionModel::forward_backward(const ToySample& sample, bool train) {
    SeqCache cache;
    assemble(sample, cache);
    const Mat logits = run_lm(cache);
    const SequenceInfo& info = cache.info;

    require(!sample.answer_tokens.empty(), "forward_backward: sample has no answer tokens");

    ForwardStats stats;
    const int first = info.answer_start;
    const int count = static_cast<int>(sample.answer_tokens.size());
    stats.answer_count = count;

    Mat dLogits = Mat::Zero(logits.rows(), logits.cols());
    for (int k = 0; k < count; ++k) {
        const int q = first + k;      // position holding answer token k
        const int row = q - 1;        // logits row predicting it
        const int target = info.token_ids[q];
        const auto lrow = logits.row(row).array();
        const double maxv = lrow.maxCoeff();
        const Eigen::ArrayXd ex = (lrow - maxv).exp();
        const double Z = ex.sum();
        const double logp = (logits(row, target) - maxv) - std::log(Z);
        stats.loss -= logp;
        Eigen::Index argmax = 0;
        lrow.maxCoeff(&argmax);
        if (int(argmax) == target) ++stats.answer_correct;
        if (train) {
            dLogits.row(row) = (ex / Z).matrix() / double(count);
            dLogits(row, target) -= 1.0 / double(count);
        }
    }
    stats.loss /= double(count);

    if (train) backward(dLogits, cache);
    return stats;
}

Mat FusionModel::forward_distributions(const ToySample& sample, SequenceInfo* info) {
    SeqCache cache;
    assemble(sample, cache);
    const Mat logits = run_lm(cache);
    if (info) *info = cache.info;
    Mat probs(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i).array();
        const Eigen::ArrayXd ex = (row - row.maxCoeff()).exp();
        probs.row(i) = (ex / ex.sum()).matrix();
    }
    return probs;
}

double FusionModel::predict_score(const ToySample& sample) {
    ToySample probe = sample;
    // answer stem up to the level word
    probe.answer_tokens = tokenizer_.encode_words("the quality of the point cloud is");
    const Mat probs = forward_distributions(probe);
    const Eigen::Index last = probs.rows() - 1;

    std::array<double, 5> level_probs{};
    double mass = 0.0;
    for (int i = 0; i < 5; ++i) {
        level_probs[i] = probs(last, Tokenizer::kLevelBase + i);
        mass += level_probs[i];
    }
    require(mass > 0.0, "predict_score: zero probability mass on level tokens");
    for (double& p : level_probs) p /= mass;
    return dequantize(level_probs);
}

std::pair<int, int> FusionModel::predict_localization(const ToySample& sample) {
    ToySample probe = sample;
    probe.answer_tokens.clear();
    Mat probs = forward_distributions(probe);
    Eigen::Index last = probs.rows() - 1;

    int best_oct = 0;
    double best = -1.0;
    for (int o = 0; o < 8; ++o) {
        const double p = probs(last, Tokenizer::kOctantBase + o);
        if (p > best) {
            best = p;
            best_oct = o;
        }
    }

    probe.answer_tokens = {Tokenizer::octant_id(best_oct)};
    probs = forward_distributions(probe);
    last = probs.rows() - 1;
    int best_type = 0;
    best = -1.0;
    for (int t = 0; t < 5; ++t) {
        const double p = probs(last, Tokenizer::kTypeBase + t);
        if (p > best) {
            best = p;
            best_type = t;
        }
    }
    return {best_oct, best_type};
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, u64 header length, JSON header, row-major f64 blocks
// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'P', 'C', 'Q', 'A', 'T', 'O', 'Y', '1'};
}

void FusionModel::save_checkpoint(const std::string& path, int stage) {
    json dims_j;
    dims_j["s"] = dims_.s;
    dims_j["n_toy"] = dims_.n_toy;
    dims_j["m"] = dims_.m;
    dims_j["c"] = dims_.c;
    dims_j["c_prime"] = dims_.c_prime;
    dims_j["t"] = dims_.t;
    dims_j["layers"] = dims_.layers;
    dims_j["heads"] = dims_.heads;
    dims_j["vocab"] = dims_.vocab;
    dims_j["context"] = dims_.context;
    dims_j["rank"] = dims_.rank;
    dims_j["alpha"] = dims_.alpha;
    dims_j["pool_patches"] = dims_.pool_patches;

    json tensors = json::array();
    // registry order is construction order and therefore stable
    for (const Param* p : registry_) {
        tensors.push_back({{"name", p->name}, {"rows", p->w.rows()}, {"cols", p->w.cols()}});
    }
    json header;
    header["dims"] = dims_j;
    header["stage"] = stage;
    header["seed"] = init_seed;
    header["tensors"] = tensors;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path + ": cannot open checkpoint for writing");
    out.write(kMagic, 8);
    const uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(hs.data(), hs.size());
    for (const Param* p : registry_) {
        for (Eigen::Index i = 0; i < p->w.rows(); ++i)
            for (Eigen::Index j = 0; j < p->w.cols(); ++j) {
                const double v = p->w(i, j);
                out.write(reinterpret_cast<const char*>(&v), 8);
            }
    }
    if (!out) fail(path + ": I/O failure while writing checkpoint");
}

std::unique_ptr<FusionModel> FusionModel::load_checkpoint(const std::string& path,
                                                          int* stage) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path + ": cannot open checkpoint");
    char magic[8];
    in.read(magic, 8);
    require(in && std::memcmp(magic, kMagic, 8) == 0, path + ": not a toy checkpoint");
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    require(bool(in), path + ": truncated checkpoint header");

    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        fail(path + ": bad checkpoint header: " + e.what());
    }
    const json& dj = header.at("dims");
    ToyDims dims;
    dims.s = dj.at("s");
    dims.n_toy = dj.at("n_toy");
    dims.m = dj.at("m");
    dims.c = dj.at("c");
    dims.c_prime = dj.at("c_prime");
    dims.t = dj.at("t");
    dims.layers = dj.at("layers");
    dims.heads = dj.at("heads");
    dims.vocab = dj.at("vocab");
    dims.context = dj.at("context");
    dims.rank = dj.at("rank");
    dims.alpha = dj.at("alpha");
    dims.pool_patches = dj.at("pool_patches");
    if (stage) *stage = header.at("stage").get<int>();

    auto model = std::make_unique<FusionModel>(dims, header.at("seed").get<uint64_t>());
    for (const auto& t : header.at("tensors")) {
        Param* p = model->find_param(t.at("name").get<std::string>());
        require(p != nullptr, path + ": unknown tensor " + t.at("name").get<std::string>());
        require(p->w.rows() == t.at("rows").get<Eigen::Index>() &&
                    p->w.cols() == t.at("cols").get<Eigen::Index>(),
                path + ": shape mismatch for " + p->name);
        for (Eigen::Index i = 0; i < p->w.rows(); ++i)
            for (Eigen::Index j = 0; j < p->w.cols(); ++j) {
                double v;
                in.read(reinterpret_cast<char*>(&v), 8);
                p->w(i, j) = v;
            }
    }
    require(bool(in), path + ": truncated checkpoint tensors");
    return model;
}

}  // namespace pcqa::toy
