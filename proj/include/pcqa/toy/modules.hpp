// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcqa/rng.hpp"
#include "pcqa/toy/dims.hpp"

namespace pcqa::toy {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Named tensor with its gradient accumulator and a freeze flag.
struct Param {
    std::string name;
    Mat w;
    Mat g;
    bool trainable = true;

    void init(const std::string& n, int rows, int cols) {
        name = n;
        w = Mat::Zero(rows, cols);
        g = Mat::Zero(rows, cols);
    }
    void zero_grad() { g.setZero(); }
};

// exact GELU and its derivative
Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& dy, const Mat& x);

/// y = x * W^T + 1 b^T, rows are tokens.
struct Linear {
    Param W;  // out x in
    Param b;  // out x 1

    struct Cache {
        Mat X;
    };

    void init(const std::string& name, int out, int in, Rng& rng);
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, const Cache& cache);
    std::vector<Param*> params() { return {&W, &b}; }
};

/// Linear with a low-rank adapter: W_eff = W + (alpha/rank) * A * B.
/// The base W and bias freeze in the adapter stage; A, B stay trainable.
/// B starts at zero so the adapted map equals the base map at init.
struct LoraLinear {
    Param W;  // out x in (base)
    Param b;  // out x 1 (base)
    Param A;  // out x r
    Param B;  // r x in
    double scale = 1.0;

    struct Cache {
        Mat X;
    };

    void init(const std::string& name, int out, int in, int rank, double alpha, Rng& rng);
    Mat effective() const { return W.w + scale * (A.w * B.w); }
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, const Cache& cache);
    std::vector<Param*> params() { return {&W, &b, &A, &B}; }
    std::vector<Param*> base_params() { return {&W, &b}; }
    std::vector<Param*> adapter_params() { return {&A, &B}; }
};

struct LayerNorm {
    Param gamma;  // 1 x c
    Param beta;   // 1 x c

    struct Cache {
        Mat xhat;
        Vec rstd;
    };

    void init(const std::string& name, int c);
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, const Cache& cache);
    std::vector<Param*> params() { return {&gamma, &beta}; }
};

/// Causal multi-head self-attention, pre-norm convention handled by the
/// enclosing block. Adapters sit on the query and value projections.
struct MultiHeadAttention {
    int heads = 1;
    int dim = 0;
    LoraLinear wq, wv;
    Linear wk, wo;

    struct Cache {
        LoraLinear::Cache qc, vc;
        Linear::Cache kc, oc;
        Mat Q, K, V;
        std::vector<Mat> att;  // per head, T x T
    };

    void init(const std::string& name, int dim, int heads, int rank, double alpha, Rng& rng);
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, Cache& cache);
    std::vector<Param*> params();
};

/// Pre-norm transformer block: x + attn(ln1(x)), then + mlp(ln2(.)),
/// MLP expansion ratio 4 with GELU.
struct Block {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear fc1, fc2;

    struct Cache {
        LayerNorm::Cache ln1c, ln2c;
        MultiHeadAttention::Cache attnc;
        Linear::Cache f1c, f2c;
        Mat A;   // post-attention residual
        Mat H1;  // fc1 output (pre-GELU)
    };

    void init(const std::string& name, int dim, int heads, int rank, double alpha, Rng& rng);
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, Cache& cache);
    std::vector<Param*> params();
};

/// Per-point MLP to width c, then m-1 learned-query attention-pooled
/// features plus one global max-pooled feature. Permutation invariant
/// within a patch. Adapters sit on the pooling query/value projections.
struct PointEncoder {
    int m = 0, c = 0;
    Linear l1, l2;          // d->c, c->c, GELU after each
    Param seeds;            // (m-1) x c learned queries
    LoraLinear wq, wv;      // c -> c

    struct Cache {
        Linear::Cache l1c, l2c;
        LoraLinear::Cache qc, vc;
        Mat h1, h2;          // pre-GELU activations of the point MLP
        Mat H;               // n x c point features
        Mat Qp;              // (m-1) x c pooled queries
        Mat P;               // (m-1) x n attention weights
        Mat Vv;              // n x c values
        std::vector<int> argmax;  // per feature dim, winning point row
    };

    void init(const std::string& name, const ToyDims& dims, Rng& rng);
    /// points: n x 6 -> m x c
    Mat forward(const Mat& points, Cache& cache) const;
    Mat backward(const Mat& dY, Cache& cache);  // returns d(points), unused
    std::vector<Param*> params();
};

/// Exactly three affine layers with GELU between them (after the first and
/// second only).
struct Projector {
    Linear p1, p2, p3;

    struct Cache {
        Linear::Cache c1, c2, c3;
        Mat h1, h2;  // pre-GELU activations
    };

    void init(const std::string& name, int out, int in, Rng& rng);
    Mat forward(const Mat& X, Cache& cache) const;
    Mat backward(const Mat& dY, Cache& cache);
    std::vector<Param*> params() { return {&p1.W, &p1.b, &p2.W, &p2.b, &p3.W, &p3.b}; }
};

}  // namespace pcqa::toy
