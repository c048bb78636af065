// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/toy/modules.hpp"

#include <cmath>

namespace pcqa::toy {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void init_uniform(Param& p, Rng& rng, double a) {
    for (Eigen::Index i = 0; i < p.w.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w.cols(); ++j) p.w(i, j) = rng.uniform(-a, a);
}

void init_normal(Param& p, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < p.w.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w.cols(); ++j) p.w(i, j) = stddev * rng.normal();
}

}  // namespace

Mat gelu(const Mat& x) {
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Mat gelu_backward(const Mat& dy, const Mat& x) {
    Mat dx = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            dx(i, j) = dy(i, j) * (cdf + v * pdf);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------

void Linear::init(const std::string& name, int out, int in, Rng& rng) {
    W.init(name + ".W", out, in);
    b.init(name + ".b", out, 1);
    init_uniform(W, rng, std::sqrt(1.0 / in));
}

Mat Linear::forward(const Mat& X, Cache& cache) const {
    cache.X = X;
    return (X * W.w.transpose()).rowwise() + b.w.col(0).transpose();
}

Mat Linear::backward(const Mat& dY, const Cache& cache) {
    W.g.noalias() += dY.transpose() * cache.X;
    b.g.col(0).noalias() += dY.colwise().sum().transpose();
    return dY * W.w;
}

// ---------------------------------------------------------------------------

void LoraLinear::init(const std::string& name, int out, int in, int rank, double alpha,
                      Rng& rng) {
    W.init(name + ".W", out, in);
    b.init(name + ".b", out, 1);
    A.init(name + ".A", out, rank);
    B.init(name + ".B", rank, in);
    scale = alpha / double(rank);
    init_uniform(W, rng, std::sqrt(1.0 / in));
    init_normal(A, rng, 0.02);
    // B stays zero: the adapted map equals the base map until trained
}

Mat LoraLinear::forward(const Mat& X, Cache& cache) const {
    cache.X = X;
    const Mat eff = effective();
    return (X * eff.transpose()).rowwise() + b.w.col(0).transpose();
}

Mat LoraLinear::backward(const Mat& dY, const Cache& cache) {
    const Mat dEff = dY.transpose() * cache.X;  // out x in
    W.g.noalias() += dEff;
    A.g.noalias() += scale * dEff * B.w.transpose();
    B.g.noalias() += scale * A.w.transpose() * dEff;
    b.g.col(0).noalias() += dY.colwise().sum().transpose();
    return dY * effective();
}

// ---------------------------------------------------------------------------

void LayerNorm::init(const std::string& name, int c) {
    gamma.init(name + ".gamma", 1, c);
    beta.init(name + ".beta", 1, c);
    gamma.w.setOnes();
}

Mat LayerNorm::forward(const Mat& X, Cache& cache) const {
    const Eigen::Index T = X.rows(), C = X.cols();
    cache.xhat.resize(T, C);
    cache.rstd.resize(T);
    Mat out(T, C);
    for (Eigen::Index i = 0; i < T; ++i) {
        const double mean = X.row(i).mean();
        const double var = (X.row(i).array() - mean).square().mean();
        const double rstd = 1.0 / std::sqrt(var + 1e-8);
        cache.rstd[i] = rstd;
        cache.xhat.row(i) = (X.row(i).array() - mean) * rstd;
        out.row(i) =
            cache.xhat.row(i).cwiseProduct(gamma.w.row(0)) + beta.w.row(0);
    }
    return out;
}

Mat LayerNorm::backward(const Mat& dY, const Cache& cache) {
    const Eigen::Index T = dY.rows(), C = dY.cols();
    Mat dX(T, C);
    for (Eigen::Index i = 0; i < T; ++i) {
        const auto xhat = cache.xhat.row(i).array();
        const auto dy = dY.row(i).array();
        const auto dxhat = dy * gamma.w.row(0).array();
        gamma.g.row(0).array() += dy * xhat;
        beta.g.row(0).array() += dy;
        const double m1 = dxhat.mean();
        const double m2 = (dxhat * xhat).mean();
        dX.row(i) = (cache.rstd[i] * (dxhat - m1 - xhat * m2)).matrix();
    }
    return dX;
}

// ---------------------------------------------------------------------------

void MultiHeadAttention::init(const std::string& name, int d, int h, int rank, double alpha,
                              Rng& rng) {
    heads = h;
    dim = d;
    wq.init(name + ".wq", d, d, rank, alpha, rng);
    wk.init(name + ".wk", d, d, rng);
    wv.init(name + ".wv", d, d, rank, alpha, rng);
    wo.init(name + ".wo", d, d, rng);
}

Mat MultiHeadAttention::forward(const Mat& X, Cache& cache) const {
    const Eigen::Index T = X.rows();
    const int dh = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(double(dh));

    cache.Q = wq.forward(X, cache.qc);
    cache.K = wk.forward(X, cache.kc);
    cache.V = wv.forward(X, cache.vc);
    cache.att.assign(heads, Mat());

    Mat ctx(T, dim);
    for (int h = 0; h < heads; ++h) {
        const auto Qh = cache.Q.middleCols(h * dh, dh);
        const auto Kh = cache.K.middleCols(h * dh, dh);
        const auto Vh = cache.V.middleCols(h * dh, dh);
        Mat att(T, T);
        for (Eigen::Index i = 0; i < T; ++i) {
            double maxv = -1e300;
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double s = Qh.row(i).dot(Kh.row(j)) * inv_sqrt;
                att(i, j) = s;
                if (s > maxv) maxv = s;
            }
            double sum = 0.0;
            for (Eigen::Index j = 0; j <= i; ++j) {
                att(i, j) = std::exp(att(i, j) - maxv);
                sum += att(i, j);
            }
            const double inv = 1.0 / sum;
            for (Eigen::Index j = 0; j <= i; ++j) att(i, j) *= inv;
            for (Eigen::Index j = i + 1; j < T; ++j) att(i, j) = 0.0;  // causal
        }
        ctx.middleCols(h * dh, dh) = att * Vh;
        cache.att[h] = std::move(att);
    }
    return wo.forward(ctx, cache.oc);
}

Mat MultiHeadAttention::backward(const Mat& dY, Cache& cache) {
    const Eigen::Index T = dY.rows();
    const int dh = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(double(dh));

    const Mat dCtx = wo.backward(dY, cache.oc);
    Mat dQ = Mat::Zero(T, dim), dK = Mat::Zero(T, dim), dV = Mat::Zero(T, dim);

    for (int h = 0; h < heads; ++h) {
        const auto Qh = cache.Q.middleCols(h * dh, dh);
        const auto Kh = cache.K.middleCols(h * dh, dh);
        const auto Vh = cache.V.middleCols(h * dh, dh);
        const Mat& att = cache.att[h];
        const auto dCtxh = dCtx.middleCols(h * dh, dh);

        const Mat dAtt = dCtxh * Vh.transpose();        // T x T
        dV.middleCols(h * dh, dh) = att.transpose() * dCtxh;

        // softmax backward row by row (masked entries have att = 0)
        Mat dS(T, T);
        for (Eigen::Index i = 0; i < T; ++i) {
            const auto a = att.row(i).array();
            const auto da = dAtt.row(i).array();
            const double dot = (a * da).sum();
            dS.row(i) = (a * (da - dot)).matrix();
        }
        dQ.middleCols(h * dh, dh) = dS * Kh * inv_sqrt;
        dK.middleCols(h * dh, dh) = dS.transpose() * Qh * inv_sqrt;
    }

    Mat dX = wq.backward(dQ, cache.qc);
    dX += wk.backward(dK, cache.kc);
    dX += wv.backward(dV, cache.vc);
    return dX;
}

std::vector<Param*> MultiHeadAttention::params() {
    std::vector<Param*> out;
    for (Param* p : wq.params()) out.push_back(p);
    for (Param* p : wk.params()) out.push_back(p);
    for (Param* p : wv.params()) out.push_back(p);
    for (Param* p : wo.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------

void Block::init(const std::string& name, int dim, int heads, int rank, double alpha,
                 Rng& rng) {
    ln1.init(name + ".ln1", dim);
    ln2.init(name + ".ln2", dim);
    attn.init(name + ".attn", dim, heads, rank, alpha, rng);
    fc1.init(name + ".fc1", 4 * dim, dim, rng);
    fc2.init(name + ".fc2", dim, 4 * dim, rng);
}

Mat Block::forward(const Mat& X, Cache& cache) const {
    const Mat a = X + attn.forward(ln1.forward(X, cache.ln1c), cache.attnc);
    cache.A = a;
    cache.H1 = fc1.forward(ln2.forward(a, cache.ln2c), cache.f1c);
    return a + fc2.forward(gelu(cache.H1), cache.f2c);
}

Mat Block::backward(const Mat& dY, Cache& cache) {
    Mat dA = dY;
    const Mat dGelu = fc2.backward(dY, cache.f2c);
    const Mat dH1 = gelu_backward(dGelu, cache.H1);
    dA += ln2.backward(fc1.backward(dH1, cache.f1c), cache.ln2c);

    Mat dX = dA;
    dX += ln1.backward(attn.backward(dA, cache.attnc), cache.ln1c);
    return dX;
}

std::vector<Param*> Block::params() {
    std::vector<Param*> out;
    for (Param* p : ln1.params()) out.push_back(p);
    for (Param* p : attn.params()) out.push_back(p);
    for (Param* p : ln2.params()) out.push_back(p);
    for (Param* p : fc1.params()) out.push_back(p);
    for (Param* p : fc2.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------

void PointEncoder::init(const std::string& name, const ToyDims& dims, Rng& rng) {
    m = dims.m;
    c = dims.c;
    l1.init(name + ".l1", dims.c, ToyDims::d, rng);
    l2.init(name + ".l2", dims.c, dims.c, rng);
    seeds.init(name + ".seeds", dims.m - 1, dims.c);
    init_normal(seeds, rng, 0.5);
    wq.init(name + ".wq", dims.c, dims.c, dims.rank, dims.alpha, rng);
    wv.init(name + ".wv", dims.c, dims.c, dims.rank, dims.alpha, rng);
}

Mat PointEncoder::forward(const Mat& points, Cache& cache) const {
    const Eigen::Index n = points.rows();
    cache.h1 = l1.forward(points, cache.l1c);
    cache.h2 = l2.forward(gelu(cache.h1), cache.l2c);
    cache.H = gelu(cache.h2);

    cache.Qp = wq.forward(seeds.w, cache.qc);            // (m-1) x c
    cache.Vv = wv.forward(cache.H, cache.vc);            // n x c
    const double inv_sqrt = 1.0 / std::sqrt(double(c));

    Mat scores = cache.Qp * cache.H.transpose() * inv_sqrt;  // (m-1) x n
    cache.P.resize(m - 1, n);
    for (Eigen::Index i = 0; i < m - 1; ++i) {
        const double maxv = scores.row(i).maxCoeff();
        const auto e = (scores.row(i).array() - maxv).exp();
        cache.P.row(i) = (e / e.sum()).matrix();
    }

    Mat out(m, c);
    out.topRows(m - 1) = cache.P * cache.Vv;

    cache.argmax.assign(c, 0);
    for (int j = 0; j < c; ++j) {
        Eigen::Index best = 0;
        cache.H.col(j).maxCoeff(&best);
        cache.argmax[j] = static_cast<int>(best);
        out(m - 1, j) = cache.H(best, j);
    }
    return out;
}

Mat PointEncoder::backward(const Mat& dY, Cache& cache) {
    const Eigen::Index n = cache.H.rows();
    const double inv_sqrt = 1.0 / std::sqrt(double(c));

    const Mat dPooled = dY.topRows(m - 1);               // (m-1) x c
    Mat dH = Mat::Zero(n, c);

    // max-pooled feature routes to the winning point
    for (int j = 0; j < c; ++j) dH(cache.argmax[j], j) += dY(m - 1, j);

    // attention pooling
    const Mat dP = dPooled * cache.Vv.transpose();       // (m-1) x n
    const Mat dVv = cache.P.transpose() * dPooled;       // n x c
    Mat dScores(m - 1, n);
    for (Eigen::Index i = 0; i < m - 1; ++i) {
        const auto p = cache.P.row(i).array();
        const auto dp = dP.row(i).array();
        const double dot = (p * dp).sum();
        dScores.row(i) = (p * (dp - dot)).matrix();
    }

    // scores = Qp * H^T * inv_sqrt
    const Mat dQp = dScores * cache.H * inv_sqrt;        // (m-1) x c
    dH += dScores.transpose() * cache.Qp * inv_sqrt;

    seeds.g.noalias() += wq.backward(dQp, cache.qc);
    dH += wv.backward(dVv, cache.vc);

    // through the per-point MLP: H = gelu(l2(gelu(l1(X))))
    const Mat dPre2 = gelu_backward(dH, cache.h2);
    const Mat dG1 = l2.backward(dPre2, cache.l2c);
    const Mat dPre1 = gelu_backward(dG1, cache.h1);
    return l1.backward(dPre1, cache.l1c);
}

std::vector<Param*> PointEncoder::params() {
    std::vector<Param*> out;
    for (Param* p : l1.params()) out.push_back(p);
    for (Param* p : l2.params()) out.push_back(p);
    out.push_back(&seeds);
    for (Param* p : wq.params()) out.push_back(p);
    for (Param* p : wv.params()) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------

void Projector::init(const std::string& name, int out, int in, Rng& rng) {
    p1.init(name + ".p1", out, in, rng);
    p2.init(name + ".p2", out, out, rng);
    p3.init(name + ".p3", out, out, rng);
}

Mat Projector::forward(const Mat& X, Cache& cache) const {
    cache.h1 = p1.forward(X, cache.c1);
    cache.h2 = p2.forward(gelu(cache.h1), cache.c2);
    return p3.forward(gelu(cache.h2), cache.c3);
}

Mat Projector::backward(const Mat& dY, Cache& cache) {
    const Mat d2 = gelu_backward(p3.backward(dY, cache.c3), cache.h2);
    const Mat d1 = gelu_backward(p2.backward(d2, cache.c2), cache.h1);
    return p1.backward(d1, cache.c1);
}

}  // namespace pcqa::toy
