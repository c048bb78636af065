// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/toy/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace pcqa::toy {

namespace {

double scheduled_lr(double base, int step, int total, double warmup_frac) {
    const double warmup = std::max(1.0, warmup_frac * double(total));
    if (step < warmup) return base * double(step + 1) / warmup;
    const double progress = double(step - warmup) / std::max(1.0, double(total) - warmup);
    return base * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace

TrainResult train(FusionModel& model, const std::vector<ToySample>& dataset,
                  const TrainConfig& config) {
    require(!dataset.empty(), "train: empty dataset");
    require(config.epochs >= 1 && config.batch_size >= 1, "train: bad epoch/batch config");
    require(config.warmup_frac >= 0.0 && config.warmup_frac < 1.0,
            "train: warmup_frac must be in [0,1)");

    model.set_stage(config.stage);

    std::vector<Param*> trainable;
    for (Param* p : model.params())
        if (p->trainable) trainable.push_back(p);
    require(!trainable.empty(), "train: no trainable parameters in this stage");

    // optimizer state
    std::vector<Mat> velocity;
    std::vector<Mat> adam_m, adam_v;
    for (Param* p : trainable) {
        velocity.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
        if (config.adam) {
            adam_m.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
            adam_v.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
        }
    }

    const size_t n = dataset.size();
    const int steps_per_epoch = static_cast<int>((n + config.batch_size - 1) / config.batch_size);
    const int total_steps = steps_per_epoch * config.epochs;

    TrainResult result;
    result.total_steps = total_steps;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    int step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(config.seed, "shuffle", uint64_t(epoch));
        for (size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_index(i + 1)]);

        double loss_sum = 0.0;
        long correct = 0, count = 0;

        for (size_t base = 0; base < n; base += config.batch_size, ++step) {
            const size_t end = std::min(base + config.batch_size, n);
            const double inv_batch = 1.0 / double(end - base);

            model.zero_grads();
            double batch_loss = 0.0;
            for (size_t k = base; k < end; ++k) {
                const ForwardStats st = model.forward_backward(dataset[order[k]], true);
                batch_loss += st.loss;
                loss_sum += st.loss;
                correct += st.answer_correct;
                count += st.answer_count;
            }
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss)) {
                fail("train: loss diverged (non-finite) at epoch " + std::to_string(epoch) +
                     " step " + std::to_string(step) + "; lower the learning rate");
            }

            const double lr = scheduled_lr(config.lr, step, total_steps, config.warmup_frac);
            for (size_t t = 0; t < trainable.size(); ++t) {
                Param* p = trainable[t];
                const Mat grad = p->g * inv_batch;
                if (config.adam) {
                    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                    adam_m[t] = b1 * adam_m[t] + (1.0 - b1) * grad;
                    adam_v[t] = b2 * adam_v[t] + (1.0 - b2) * grad.cwiseProduct(grad);
                    const double mc = 1.0 - std::pow(b1, step + 1);
                    const double vc = 1.0 - std::pow(b2, step + 1);
                    p->w -= lr * (adam_m[t] / mc)
                                     .cwiseQuotient((adam_v[t] / vc).cwiseSqrt().array()
                                                        .max(eps)
                                                        .matrix());
                } else {
                    velocity[t] = config.momentum * velocity[t] - lr * grad;
                    p->w += velocity[t];
                }
            }
        }

        result.epoch_loss.push_back(loss_sum / double(n));
        result.epoch_accuracy.push_back(count > 0 ? double(correct) / double(count) : 0.0);
    }

    if (!config.curve_path.empty()) {
        std::ofstream out(config.curve_path);
        if (!out) fail(config.curve_path + ": cannot write loss curve");
        out << "epoch,loss,answer_accuracy\n";
        out.precision(17);
        for (size_t e = 0; e < result.epoch_loss.size(); ++e)
            out << e << "," << result.epoch_loss[e] << "," << result.epoch_accuracy[e] << "\n";
    }
    return result;
}

}  // namespace pcqa::toy
