#pragma once

#include "wsnet/dataset.hpp"
#include "wsnet/network.hpp"
#include "wsnet/optim.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace wsnet {

inline double evaluate_accuracy(Network& net, const Dataset& ds, int batch = 64) {
    require(ds.size() > 0, "evaluate: empty dataset");
    size_t correct = 0;
    for (size_t start = 0; start < ds.size(); start += batch) {
        const size_t end = std::min(ds.size(), start + batch);
        std::vector<Matrix> inputs;
        inputs.reserve(end - start);
        for (size_t i = start; i < end; ++i) inputs.push_back(ds.feature(i));
        Matrix logits = forward_network(net, inputs, Mode::eval);
        for (size_t i = start; i < end; ++i)
            if (argmax_row(logits.row(static_cast<int>(i - start)), logits.cols) ==
                ds.labels[i])
                ++correct;
    }
    return static_cast<double>(correct) / ds.size();
}

struct TrainResult {
    double final_loss = 0.0;
    double final_acc = 0.0;
    std::int64_t iterations = 0;
};

// Mini-batch training with Adam. Logs `iter=<n> loss=<f> acc=<f>` every
// eval_interval iterations (accuracy on eval_set when given, otherwise on the
// current batch). Deterministic for a fixed seed.
inline TrainResult train(Network& net, const Dataset& train_set, const Dataset* eval_set,
                         const TrainHyper& hyper, std::ostream& log) {
    require(train_set.size() > 0, "train: empty dataset");
    require(train_set.classes >= 2, "train: need at least two classes");

    Rng rng(hyper.seed);
    init_network(net, rng, hyper.init_std);

    std::vector<ParamRef> blocks = net.param_blocks();
    AdamState opt;
    opt.init(blocks);

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t cursor = order.size(); // force an initial shuffle

    const int bsz = std::min<int>(hyper.batch, static_cast<int>(train_set.size()));
    TrainResult res;
    res.iterations = hyper.iters;

    for (std::int64_t iter = 1; iter <= hyper.iters; ++iter) {
        std::vector<Matrix> inputs;
        std::vector<int> labels;
        inputs.reserve(bsz);
        labels.reserve(bsz);
        for (int i = 0; i < bsz; ++i) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const size_t idx = order[cursor++];
            inputs.push_back(train_set.feature(idx));
            labels.push_back(train_set.labels[idx]);
        }

        ForwardCache cache;
        Matrix logits = forward_network(net, inputs, Mode::train, &cache, &rng);
        const double loss = cross_entropy(logits, labels);
        if (!std::isfinite(loss))
            throw runtime_failure("train: loss diverged at iteration " +
                                  std::to_string(iter));
        backward_network(net, cache, cross_entropy_grad(logits, labels));
        adam_step(blocks, opt, hyper);
        res.final_loss = loss;

        if (hyper.eval_interval > 0 &&
            (iter % hyper.eval_interval == 0 || iter == hyper.iters)) {
            double acc;
            if (eval_set && eval_set->size() > 0) {
                acc = evaluate_accuracy(net, *eval_set);
            } else {
                Matrix check = forward_network(net, inputs, Mode::eval);
                int ok = 0;
                for (int b = 0; b < check.rows; ++b)
                    if (argmax_row(check.row(b), check.cols) == labels[b]) ++ok;
                acc = static_cast<double>(ok) / check.rows;
            }
            res.final_acc = acc;
            char line[96];
            std::snprintf(line, sizeof(line), "iter=%lld loss=%.6f acc=%.4f",
                          static_cast<long long>(iter), loss, acc);
            log << line << "\n";
        }
    }
    return res;
}

} // namespace wsnet
