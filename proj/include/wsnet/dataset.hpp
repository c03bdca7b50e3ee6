#pragma once

#include "wsnet/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace wsnet {

// Labeled single-channel clips of uniform length.
struct Dataset {
    int classes = 0;
    int length = 0;
    std::vector<std::vector<float>> clips;
    std::vector<int> labels;

    size_t size() const { return clips.size(); }

    Matrix feature(size_t i) const {
        Matrix f(length, 1);
        for (int t = 0; t < length; ++t) f.at(t, 0) = clips[i][t];
        return f;
    }
};

// Synthetic octave task: class k is a sinusoid at base_cycles * 2^k cycles per
// clip plus its third harmonic and Gaussian noise, normalized to [-1, 1].
// The third harmonic keeps class spectra disjoint (octaves collide with second
// harmonics).
inline Dataset synth_dataset(int num_classes, int per_class, int length,
                             std::uint64_t seed) {
    require(num_classes >= 2, "synth: need at least two classes");
    require(length >= 64, "synth: clip length must be >= 64");
    Dataset ds;
    ds.classes = num_classes;
    ds.length = length;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 0.1);
    const double base_cycles = std::max(2.0, length / 256.0);
    for (int k = 0; k < num_classes; ++k) {
        const double cycles = base_cycles * std::pow(2.0, k);
        for (int i = 0; i < per_class; ++i) {
            const double p1 = phase(rng);
            const double p3 = phase(rng);
            std::vector<float> clip(length);
            double peak = 0.0;
            std::vector<double> raw(length);
            for (int t = 0; t < length; ++t) {
                const double arg = 2.0 * std::numbers::pi * cycles * t / length;
                raw[t] = std::sin(arg + p1) + 0.3 * std::sin(3.0 * arg + p3) + noise(rng);
                peak = std::max(peak, std::abs(raw[t]));
            }
            for (int t = 0; t < length; ++t)
                clip[t] = static_cast<float>(raw[t] / (peak > 0.0 ? peak : 1.0));
            ds.clips.push_back(std::move(clip));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

// Deterministic stratified split: every round(1/holdout)-th clip of each class
// goes to the held-out set.
inline void split_dataset(const Dataset& ds, double holdout, Dataset& train, Dataset& eval) {
    require(holdout > 0.0 && holdout < 1.0, "split: holdout fraction must be in (0, 1)");
    train = Dataset{};
    eval = Dataset{};
    train.classes = eval.classes = ds.classes;
    train.length = eval.length = ds.length;
    const int every = std::max(2, static_cast<int>(std::lround(1.0 / holdout)));
    std::vector<int> seen(ds.classes, 0);
    for (size_t i = 0; i < ds.size(); ++i) {
        Dataset& dst = (seen[ds.labels[i]]++ % every == every - 1) ? eval : train;
        dst.clips.push_back(ds.clips[i]);
        dst.labels.push_back(ds.labels[i]);
    }
}

} // namespace wsnet
