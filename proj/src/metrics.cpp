// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pcqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcqa/rng.hpp"

namespace pcqa {

using nlohmann::json;

std::vector<double> midranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (double(i + 1) + double(j + 1));  // 1-based
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

Correlation pearson(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "pearson: length mismatch");
    require(a.size() >= 3, "pearson: need at least 3 points");
    const double n = double(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return {0.0, false};  // constant vector
    return {sab / std::sqrt(saa * sbb), true};
}

Correlation srocc(const std::vector<double>& pred, const std::vector<double>& mos) {
    require(pred.size() == mos.size(), "srocc: length mismatch");
    require(pred.size() >= 3, "srocc: need at least 3 points");
    return pearson(midranks(pred), midranks(mos));
}

namespace {

double logistic4(double x, const std::array<double, 4>& b) {
    return b[0] + b[1] / (1.0 + std::exp(-(x - b[2]) / std::abs(b[3])));
}

double sse(const std::vector<double>& x, const std::vector<double>& y,
           const std::array<double, 4>& b) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - logistic4(x[i], b);
        s += r * r;
    }
    return s;
}

// damped Gauss-Newton; returns true on convergence
bool fit_logistic4(const std::vector<double>& x, const std::vector<double>& y,
                   std::array<double, 4>& b) {
    const size_t n = x.size();
    double lambda = 1e-3;
    double cur = sse(x, y, b);
    for (int iter = 0; iter < 500; ++iter) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        const double ab4 = std::abs(b[3]);
        for (size_t i = 0; i < n; ++i) {
            const double t = (x[i] - b[2]) / ab4;
            const double s = 1.0 / (1.0 + std::exp(-t));
            const double ds = s * (1.0 - s);
            Eigen::Vector4d g;
            g[0] = 1.0;
            g[1] = s;
            g[2] = -b[1] * ds / ab4;
            g[3] = -b[1] * ds * t / ab4 * (b[3] < 0 ? -1.0 : 1.0);
            const double r = y[i] - logistic4(x[i], b);
            jtj += g * g.transpose();
            jtr += g * r;
        }
        bool accepted = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::Matrix4d damped = jtj;
            for (int d = 0; d < 4; ++d)
                damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
            const Eigen::Vector4d delta = damped.ldlt().solve(jtr);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            std::array<double, 4> nb = b;
            for (int d = 0; d < 4; ++d) nb[d] += delta[d];
            if (std::abs(nb[3]) < 1e-12) nb[3] = (nb[3] < 0 ? -1e-12 : 1e-12);
            const double next = sse(x, y, nb);
            if (std::isfinite(next) && next <= cur) {
                const double improvement = cur - next;
                b = nb;
                cur = next;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (improvement <= 1e-14 * (cur + 1e-30) || delta.norm() <= 1e-12)
                    return true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) return iter > 0;  // stalled; accept if we moved at all
    }
    return false;
}

}  // namespace

PlccResult plcc(const std::vector<double>& pred, const std::vector<double>& mos,
                PlccFit fit) {
    require(pred.size() == mos.size(), "plcc: length mismatch");
    PlccResult res;
    if (fit == PlccFit::None) {
        res.corr = pearson(pred, mos);
        return res;
    }
    require(pred.size() >= 4, "plcc: logistic fit needs at least 4 points");

    const auto [lo_it, hi_it] = std::minmax_element(pred.begin(), pred.end());
    const auto [ylo_it, yhi_it] = std::minmax_element(mos.begin(), mos.end());
    if (*lo_it == *hi_it || *ylo_it == *yhi_it) {
        res.corr = pearson(pred, mos);  // degenerate; flags undefined
        return res;
    }

    // initialize from data quantiles
    std::vector<double> sorted = pred;
    std::sort(sorted.begin(), sorted.end());
    std::array<double, 4> b;
    b[0] = *ylo_it;
    b[1] = *yhi_it - *ylo_it;
    b[2] = sorted[sorted.size() / 2];
    b[3] = std::max((*hi_it - *lo_it) / 8.0, 1e-6);

    if (!fit_logistic4(pred, mos, b)) {
        res.fit_fell_back = true;
        res.corr = pearson(pred, mos);
        return res;
    }
    res.beta = b;
    std::vector<double> mapped(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) mapped[i] = logistic4(pred[i], b);
    res.corr = pearson(mapped, mos);
    if (!res.corr.defined) {
        // fitted curve collapsed; report raw instead
        res.fit_fell_back = true;
        res.corr = pearson(pred, mos);
    }
    return res;
}

double classification_accuracy(const std::vector<int>& preds,
                               const std::vector<int>& labels) {
    require(preds.size() == labels.size(), "accuracy: length mismatch");
    require(!preds.empty(), "accuracy: empty input");
    size_t hit = 0;
    for (size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hit;
    return double(hit) / double(preds.size());
}

std::vector<SplitPlan> make_splits(const std::vector<SampleRecord>& manifest,
                                   int n_splits, uint64_t seed) {
    require(n_splits >= 1, "make_splits: n_splits must be >= 1");
    // distinct content ids in first-appearance order
    std::vector<std::string> contents;
    for (const auto& r : manifest) {
        if (std::find(contents.begin(), contents.end(), r.content_id) == contents.end())
            contents.push_back(r.content_id);
    }
    require(contents.size() >= 5,
            "make_splits: need at least 5 distinct contents, have " +
                std::to_string(contents.size()));

    std::vector<SplitPlan> plans;
    for (int s = 1; s <= n_splits; ++s) {
        std::vector<std::string> shuffled = contents;
        Rng rng(seed + uint64_t(s));
        for (size_t i = shuffled.size() - 1; i > 0; --i) {
            const size_t j = rng.uniform_index(i + 1);
            std::swap(shuffled[i], shuffled[j]);
        }
        const size_t n_test =
            std::max<size_t>(1, static_cast<size_t>(std::llround(contents.size() / 5.0)));
        SplitPlan plan;
        plan.split_id = s;
        plan.test_ids.assign(shuffled.begin(), shuffled.begin() + n_test);
        plan.train_ids.assign(shuffled.begin() + n_test, shuffled.end());
        std::sort(plan.test_ids.begin(), plan.test_ids.end());
        std::sort(plan.train_ids.begin(), plan.train_ids.end());
        plans.push_back(std::move(plan));
    }
    return plans;
}

MetricReport run_protocol(ProtocolRunner& runner,
                          const std::vector<SampleRecord>& manifest,
                          const std::vector<SplitPlan>& plans,
                          const ProtocolOptions& options) {
    require(!plans.empty(), "run_protocol: no split plans");
    require(options.n_seeds >= 1, "run_protocol: n_seeds must be >= 1");

    MetricReport rep;
    rep.n_splits = static_cast<int>(plans.size());
    rep.n_seeds = options.n_seeds;

    for (const auto& plan : plans) {
        std::vector<SampleRecord> train_set, test_set;
        for (const auto& r : manifest) {
            const bool in_train =
                std::binary_search(plan.train_ids.begin(), plan.train_ids.end(), r.content_id);
            const bool in_test =
                std::binary_search(plan.test_ids.begin(), plan.test_ids.end(), r.content_id);
            require(!(in_train && in_test), "run_protocol: split leaks content " + r.content_id);
            if (in_train) train_set.push_back(r);
            if (in_test) test_set.push_back(r);
        }
        require(!test_set.empty(),
                "run_protocol: split " + std::to_string(plan.split_id) + " has no test samples");

        runner.train(train_set, plan.split_id);

        std::vector<double> srocc_seeds, plcc_seeds;
        for (int si = 0; si < options.n_seeds; ++si) {
            const uint64_t sampling_seed =
                Rng::mix(options.seed_base, (uint64_t(plan.split_id) << 32) | uint64_t(si));
            std::vector<double> preds, targets;
            for (const auto& r : test_set) {
                try {
                    preds.push_back(runner.predict(r, sampling_seed));
                    targets.push_back(r.mos);
                } catch (const std::exception& e) {
                    rep.failures.push_back("split " + std::to_string(plan.split_id) +
                                           " seed " + std::to_string(si) + " sample '" +
                                           r.content_id + "': " + e.what());
                }
            }
            double sv = std::numeric_limits<double>::quiet_NaN();
            double pv = std::numeric_limits<double>::quiet_NaN();
            if (preds.size() >= 3) {
                const Correlation s = srocc(preds, targets);
                const PlccResult p = plcc(preds, targets, options.plcc_fit);
                if (s.defined) sv = s.value; else ++rep.undefined_cells;
                if (p.corr.defined) pv = p.corr.value; else ++rep.undefined_cells;
            } else {
                rep.undefined_cells += 2;
            }
            srocc_seeds.push_back(sv);
            plcc_seeds.push_back(pv);
        }
        rep.srocc_grid.push_back(srocc_seeds);
        rep.plcc_grid.push_back(plcc_seeds);
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    for (int s = 0; s < rep.n_splits; ++s) {
        rep.srocc_split_mean.push_back(mean_of(rep.srocc_grid[s]));
        rep.plcc_split_mean.push_back(mean_of(rep.plcc_grid[s]));
    }
    rep.srocc_mean = mean_of(rep.srocc_split_mean);
    rep.plcc_mean = mean_of(rep.plcc_split_mean);
    return rep;
}

std::string MetricReport::to_json() const {
    json j;
    j["n_splits"] = n_splits;
    j["n_seeds"] = n_seeds;
    j["srocc_grid"] = srocc_grid;
    j["plcc_grid"] = plcc_grid;
    j["srocc_split_mean"] = srocc_split_mean;
    j["plcc_split_mean"] = plcc_split_mean;
    j["srocc_mean"] = srocc_mean;
    j["plcc_mean"] = plcc_mean;
    j["failures"] = failures;
    j["undefined_cells"] = undefined_cells;
    return j.dump(2);
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out << "split,seed,srocc,plcc\n";
    out.setf(std::ios::fmtflags(0), std::ios::floatfield);
    out.precision(17);
    for (int s = 0; s < n_splits; ++s)
        for (int k = 0; k < n_seeds; ++k)
            out << (s + 1) << "," << k << "," << srocc_grid[s][k] << "," << plcc_grid[s][k]
                << "\n";
    out << "mean,," << srocc_mean << "," << plcc_mean << "\n";
    return out.str();
}

}  // namespace pcqa
