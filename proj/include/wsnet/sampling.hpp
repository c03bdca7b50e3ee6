#pragma once

#include "wsnet/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

// Condensed-filter geometry: every convolution filter of a layer is a window
// of one small learnable block. Spatial sampling slides a length-L window with
// stride S; channel sampling tiles the block's channels C times; denser
// sampling (factor D) halves the window stride and pairs the layer with a 1x1
// reduction back to the nominal filter count.

namespace wsnet {

enum class Padding { same, valid };

struct SamplingSpec {
    int filter_len = 0;        // length of each sampled filter
    int num_filters = 0;       // filters exposed to the next layer
    int sampling_stride = 0;   // window offset inside the condensed filter
    int channel_tile = 1;      // input channels / condensed channels
    int in_channels = 1;
    int conv_stride = 1;
    int denser_factor = 1;     // >1: sample denser_factor*num_filters windows at stride/denser_factor
    Padding padding = Padding::same;

    // derived
    int condensed_len = 0;
    int condensed_channels = 0;

    // number of windows actually cut from the condensed filter
    int sampled_filters() const { return num_filters * denser_factor; }
    // window-to-window offset actually used when cutting
    int effective_stride() const { return sampling_stride / denser_factor; }
};

struct SamplingParams {
    int filter_len = 0;
    int num_filters = 0;
    int sampling_stride = 0;   // 0 = conventional layer (stride == filter_len)
    int channel_tile = 1;
    int in_channels = 1;
    int conv_stride = 1;
    int denser_factor = 1;
    Padding padding = Padding::same;
};

inline SamplingSpec make_sampling_spec(const SamplingParams& p) {
    SamplingSpec s;
    s.filter_len = p.filter_len;
    s.num_filters = p.num_filters;
    s.sampling_stride = p.sampling_stride > 0 ? p.sampling_stride : p.filter_len;
    s.channel_tile = p.channel_tile;
    s.in_channels = p.in_channels;
    s.conv_stride = p.conv_stride;
    s.denser_factor = p.denser_factor;
    s.padding = p.padding;

    require(s.filter_len >= 1, "sampling spec: filter length must be >= 1");
    require(s.num_filters >= 1, "sampling spec: filter count must be >= 1");
    require(s.conv_stride >= 1, "sampling spec: conv stride must be >= 1");
    require(s.sampling_stride >= 1, "sampling spec: sampling stride must be >= 1");
    // A stride beyond the window length would leave condensed weights that no
    // filter reads; those weights would never receive gradient.
    require(s.sampling_stride <= s.filter_len,
            "sampling spec: sampling stride exceeds filter length");
    require(s.channel_tile >= 1 && s.in_channels >= 1, "sampling spec: bad channel counts");
    require(s.in_channels % s.channel_tile == 0,
            "sampling spec: channel tile factor must divide the input channel count");
    require(s.denser_factor >= 1, "sampling spec: denser factor must be >= 1");
    if (s.denser_factor > 1) {
        require(s.sampling_stride % s.denser_factor == 0,
                "sampling spec: denser factor must divide the sampling stride");
    }

    const int windows = s.sampled_filters();
    const int step = s.effective_stride();
    s.condensed_len = s.filter_len + (windows - 1) * step;
    s.condensed_channels = s.in_channels / s.channel_tile;
    return s;
}

// Parameter block of one layer: values has shape (condensed_len, condensed_channels).
struct CondensedFilter {
    Matrix values;
    SamplingSpec spec;
};

inline void check_condensed(const CondensedFilter& phi) {
    require(phi.values.rows == phi.spec.condensed_len &&
                phi.values.cols == phi.spec.condensed_channels,
            "condensed filter: value shape does not match spec");
    for (double v : phi.values.data)
        require(std::isfinite(v), "condensed filter: non-finite entry");
}

// Materialized bank, shape (filter_len, in_channels, sampled_filters).
struct FilterBank {
    Tensor3 values;
};

// bank[l, m, n] = phi[n*step + l, m mod condensed_channels]
inline FilterBank sample_filters(const CondensedFilter& phi) {
    check_condensed(phi);
    const SamplingSpec& s = phi.spec;
    const int step = s.effective_stride();
    FilterBank bank;
    bank.values = Tensor3(s.filter_len, s.in_channels, s.sampled_filters());
    for (int l = 0; l < s.filter_len; ++l)
        for (int m = 0; m < s.in_channels; ++m) {
            const int j = m % s.condensed_channels;
            double* out = bank.values.ptr(l, m);
            for (int n = 0; n < s.sampled_filters(); ++n)
                out[n] = phi.values.at(n * step + l, j);
        }
    return bank;
}

struct KernelIndex {
    int pos;     // position inside the filter
    int ch;      // bank channel
    int filter;  // filter index
};

// For each condensed cell (i, j), the set of bank entries tied to it.
struct PositionMap {
    int condensed_len = 0;
    int condensed_channels = 0;
    std::vector<std::vector<KernelIndex>> cells;

    const std::vector<KernelIndex>& cell(int i, int j) const {
        return cells[static_cast<size_t>(i) * condensed_channels + j];
    }
    std::vector<KernelIndex>& cell(int i, int j) {
        return cells[static_cast<size_t>(i) * condensed_channels + j];
    }
};

inline PositionMap position_map(const SamplingSpec& spec) {
    PositionMap pm;
    pm.condensed_len = spec.condensed_len;
    pm.condensed_channels = spec.condensed_channels;
    pm.cells.resize(static_cast<size_t>(spec.condensed_len) * spec.condensed_channels);
    const int step = spec.effective_stride();
    for (int n = 0; n < spec.sampled_filters(); ++n)
        for (int l = 0; l < spec.filter_len; ++l)
            for (int m = 0; m < spec.in_channels; ++m)
                pm.cell(n * step + l, m % spec.condensed_channels)
                    .push_back(KernelIndex{l, m, n});
    return pm;
}

// Parameter-count ratio of the equivalent independently-parameterized layer
// to the condensed block.
inline double compactness(const SamplingSpec& spec) {
    const double full = static_cast<double>(spec.filter_len) * spec.in_channels *
                        spec.num_filters;
    const double condensed =
        static_cast<double>(spec.condensed_len) * spec.condensed_channels;
    return full / condensed;
}

// Rebuild the spec with denser sampling: denser_factor times more windows cut
// at stride/denser_factor each. The companion 1x1 reduction has shape
// (1, sampled_filters, num_filters); its weights are independent parameters.
inline SamplingSpec denser_spec(const SamplingSpec& spec, int denser_factor) {
    if (denser_factor == 1) return spec;
    require(denser_factor >= 1, "denser sampling: factor must be >= 1");
    require(spec.sampling_stride % denser_factor == 0,
            "denser sampling: factor must divide the sampling stride");
    SamplingParams p;
    p.filter_len = spec.filter_len;
    p.num_filters = spec.num_filters;
    p.sampling_stride = spec.sampling_stride;
    p.channel_tile = spec.channel_tile;
    p.in_channels = spec.in_channels;
    p.conv_stride = spec.conv_stride;
    p.denser_factor = denser_factor;
    p.padding = spec.padding;
    return make_sampling_spec(p);
}

// Fully connected sampling: the weight vector is scanned with a window of
// n_in values and the given stride; column k of the (n_in, n_out) matrix is
// phi_vec[k*stride .. k*stride + n_in).
inline Matrix sample_fc(const std::vector<double>& phi_vec, int n_in, int n_out, int stride) {
    require(n_in >= 1 && n_out >= 1, "fc sampling: bad dimensions");
    require(stride >= 1 && stride <= n_in, "fc sampling: stride must be in [1, n_in]");
    const size_t want = static_cast<size_t>(n_in) + static_cast<size_t>(n_out - 1) * stride;
    require(phi_vec.size() == want, "fc sampling: weight vector length mismatch");
    Matrix w(n_in, n_out);
    for (int k = 0; k < n_out; ++k)
        for (int r = 0; r < n_in; ++r)
            w.at(r, k) = phi_vec[static_cast<size_t>(k) * stride + r];
    return w;
}

inline size_t fc_condensed_len(int n_in, int n_out, int stride) {
    return static_cast<size_t>(n_in) + static_cast<size_t>(n_out - 1) * stride;
}

// ---------------------------------------------------------------------------
// 2D extension: filters are patches cut from a 2D condensed block on a
// ceil(sqrt(N)) x ceil(sqrt(N)) grid, row-major, first N cells used.
// ---------------------------------------------------------------------------

struct SamplingSpec2D {
    int filter_w = 0, filter_h = 0;
    int num_filters = 0;
    int stride_w = 0, stride_h = 0;
    int channel_tile = 1;
    int in_channels = 1;
    // derived
    int grid = 0;
    int condensed_w = 0, condensed_h = 0;
    int condensed_channels = 0;
};

inline SamplingSpec2D make_sampling_spec_2d(int filter_w, int filter_h, int num_filters,
                                            int stride_w, int stride_h, int channel_tile,
                                            int in_channels) {
    require(filter_w >= 1 && filter_h >= 1, "2d sampling: bad filter size");
    require(num_filters >= 1, "2d sampling: filter count must be >= 1");
    require(stride_w >= 1 && stride_h >= 1, "2d sampling: strides must be >= 1");
    require(stride_w <= filter_w && stride_h <= filter_h,
            "2d sampling: stride exceeds filter size");
    require(in_channels % channel_tile == 0,
            "2d sampling: channel tile factor must divide the input channel count");
    SamplingSpec2D s;
    s.filter_w = filter_w;
    s.filter_h = filter_h;
    s.num_filters = num_filters;
    s.stride_w = stride_w;
    s.stride_h = stride_h;
    s.channel_tile = channel_tile;
    s.in_channels = in_channels;
    s.grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_filters))));
    s.condensed_w = filter_w + (s.grid - 1) * stride_w;
    s.condensed_h = filter_h + (s.grid - 1) * stride_h;
    s.condensed_channels = in_channels / channel_tile;
    return s;
}

// Condensed 2D block, values indexed (x, y, channel).
struct CondensedFilter2D {
    Tensor3 values; // (condensed_w, condensed_h, condensed_channels)
    SamplingSpec2D spec;
};

struct FilterBank2D {
    int w = 0, h = 0, channels = 0, count = 0;
    std::vector<double> data; // index ((x*h + y)*channels + m)*count + n

    double& at(int x, int y, int m, int n) {
        return data[((static_cast<size_t>(x) * h + y) * channels + m) * count + n];
    }
    double at(int x, int y, int m, int n) const {
        return data[((static_cast<size_t>(x) * h + y) * channels + m) * count + n];
    }
};

// Filter n sits at grid cell (row, col) = (n / grid, n mod grid) with offsets
// (col*stride_w, row*stride_h) in (x, y).
inline FilterBank2D sample_filters_2d(const CondensedFilter2D& phi) {
    const SamplingSpec2D& s = phi.spec;
    require(phi.values.d0 == s.condensed_w && phi.values.d1 == s.condensed_h &&
                phi.values.d2 == s.condensed_channels,
            "2d sampling: condensed block shape mismatch");
    FilterBank2D bank;
    bank.w = s.filter_w;
    bank.h = s.filter_h;
    bank.channels = s.in_channels;
    bank.count = s.num_filters;
    bank.data.assign(static_cast<size_t>(s.filter_w) * s.filter_h * s.in_channels *
                         s.num_filters,
                     0.0);
    for (int n = 0; n < s.num_filters; ++n) {
        const int row = n / s.grid;
        const int col = n % s.grid;
        const int ox = col * s.stride_w;
        const int oy = row * s.stride_h;
        for (int x = 0; x < s.filter_w; ++x)
            for (int y = 0; y < s.filter_h; ++y)
                for (int m = 0; m < s.in_channels; ++m)
                    bank.at(x, y, m, n) =
                        phi.values.at(ox + x, oy + y, m % s.condensed_channels);
    }
    return bank;
}

} // namespace wsnet
