#pragma once

#include "wsnet/sampling.hpp"
#include "wsnet/tensor.hpp"

#include <cstdint>

// Two execution paths for a sampled 1D convolution layer:
//
//   conv_naive   materialized filter bank, direct loops
//   conv_fast    channel wrap -> inner-product map -> diagonal integral
//                image -> O(1) per-output lookups
//
// Both accumulate in double and use a fixed ascending summation order, so the
// fast path matches the naive path to rounding error. Padding rows are
// realized as explicit zero rows of the inner-product map, which makes the
// boundary behaviour of the lookups a consequence of the table instead of a
// special case.

namespace wsnet {

// Multiply/add tallies. Each stage counts one unit per table entry it writes
// (inner products count one per fused multiply-add); the analytic cost model
// reproduces these numbers exactly.
struct OpCounter {
    std::int64_t wrap_adds = 0;             // channel wrap additions
    std::int64_t inner_product_multadds = 0;
    std::int64_t integral_updates = 0;      // one per integral-image cell
    std::int64_t retrieval_ops = 0;         // one subtraction per output value
    std::int64_t naive_multadds = 0;
    std::int64_t pointwise_multadds = 0;

    std::int64_t fast_total() const {
        return wrap_adds + inner_product_multadds + integral_updates + retrieval_ops;
    }
};

struct ConvGeometry {
    int pad_left = 0;
    int pad_right = 0;
    int padded_len = 0;
    int out_len = 0;
};

inline ConvGeometry conv_geometry(int in_len, int filter_len, int conv_stride,
                                  Padding padding) {
    require(in_len >= 1, "convolution: empty input");
    ConvGeometry g;
    if (padding == Padding::same) {
        g.pad_left = (filter_len - 1) / 2;
        g.pad_right = filter_len - 1 - g.pad_left;
        g.padded_len = in_len + filter_len - 1;
        g.out_len = (in_len + conv_stride - 1) / conv_stride;
    } else {
        require(in_len >= filter_len, "convolution: input shorter than filter (valid padding)");
        g.pad_left = 0;
        g.pad_right = 0;
        g.padded_len = in_len;
        g.out_len = (in_len - filter_len) / conv_stride + 1;
    }
    return g;
}

inline Matrix pad_rows(const FeatureMap& input, int pad_left, int pad_right) {
    Matrix padded(input.rows + pad_left + pad_right, input.cols);
    for (int t = 0; t < input.rows; ++t) {
        const double* src = input.row(t);
        double* dst = padded.row(t + pad_left);
        for (int m = 0; m < input.cols; ++m) dst[m] = src[m];
    }
    return padded;
}

// out[t, n] = sum_{l,m} padded[t*stride + l, m] * bank[l, m, n]
inline Matrix conv_naive(const FeatureMap& input, const FilterBank& bank, int conv_stride,
                         Padding padding, OpCounter* counter = nullptr) {
    const int filter_len = bank.values.d0;
    const int channels = bank.values.d1;
    const int count = bank.values.d2;
    require(input.cols == channels, "conv_naive: input/filter channel mismatch");
    const ConvGeometry g = conv_geometry(input.rows, filter_len, conv_stride, padding);
    const Matrix padded = pad_rows(input, g.pad_left, g.pad_right);

    Matrix out(g.out_len, count);
    for (int t = 0; t < g.out_len; ++t) {
        double* orow = out.row(t);
        for (int l = 0; l < filter_len; ++l) {
            const double* frow = padded.row(t * conv_stride + l);
            for (int m = 0; m < channels; ++m) {
                const double x = frow[m];
                const double* krow = bank.values.ptr(l, m);
                for (int n = 0; n < count; ++n) orow[n] += x * krow[n];
            }
        }
    }
    if (counter)
        counter->naive_multadds += static_cast<std::int64_t>(g.out_len) * filter_len *
                                   channels * count;
    return out;
}

// wrapped[i, j] = sum_c input[i, j + c*condensed_channels]
inline Matrix channel_wrap(const FeatureMap& input, int condensed_channels,
                           OpCounter* counter = nullptr) {
    require(condensed_channels >= 1 && input.cols % condensed_channels == 0,
            "channel wrap: condensed channel count must divide the input channels");
    const int tile = input.cols / condensed_channels;
    Matrix wrapped(input.rows, condensed_channels);
    for (int i = 0; i < input.rows; ++i) {
        const double* src = input.row(i);
        double* dst = wrapped.row(i);
        for (int j = 0; j < condensed_channels; ++j) dst[j] = src[j];
        for (int c = 1; c < tile; ++c) {
            const double* blk = src + static_cast<size_t>(c) * condensed_channels;
            for (int j = 0; j < condensed_channels; ++j) dst[j] += blk[j];
        }
    }
    if (counter)
        counter->wrap_adds +=
            static_cast<std::int64_t>(input.rows) * condensed_channels * (tile - 1);
    return wrapped;
}

// P[u, v] = wrapped[u, :] . phi[v, :]  -- the input is expected to carry its
// padding rows already (as explicit zeros), so out-of-range rows of P are zero.
inline Matrix inner_product_map(const FeatureMap& wrapped_padded, const Matrix& phi,
                                OpCounter* counter = nullptr) {
    require(wrapped_padded.cols == phi.cols,
            "inner product map: wrapped input channels must match condensed channels");
    const int rows = wrapped_padded.rows;
    const int positions = phi.rows;
    Matrix p(rows, positions);
    for (int u = 0; u < rows; ++u) {
        const double* f = wrapped_padded.row(u);
        double* prow = p.row(u);
        for (int v = 0; v < positions; ++v) {
            const double* ph = phi.row(v);
            double s = 0.0;
            for (int j = 0; j < phi.cols; ++j) s += f[j] * ph[j];
            prow[v] = s;
        }
    }
    if (counter)
        counter->inner_product_multadds +=
            static_cast<std::int64_t>(rows) * positions * phi.cols;
    return p;
}

// Diagonal prefix sums: I[u, v] = I[u-1, v-1] + P[u, v]; first row and first
// column are copies of P.
inline Matrix integral_image(const Matrix& p, OpCounter* counter = nullptr) {
    Matrix ii(p.rows, p.cols);
    for (int u = 0; u < p.rows; ++u) {
        const double* prow = p.row(u);
        double* irow = ii.row(u);
        if (u == 0) {
            for (int v = 0; v < p.cols; ++v) irow[v] = prow[v];
        } else {
            const double* prev = ii.row(u - 1);
            irow[0] = prow[0];
            for (int v = 1; v < p.cols; ++v) irow[v] = prev[v - 1] + prow[v];
        }
    }
    if (counter)
        counter->integral_updates += static_cast<std::int64_t>(p.rows) * p.cols;
    return ii;
}

// Fast path. Streams the tables row by row (a ring buffer keeps the last
// filter_len + 1 integral rows), producing exactly the values of
//   wrap -> inner_product_map -> integral_image -> lookups
// in the same summation order, without materializing T_pad x L* tables.
//
// out[t, n] = I[t*stride + L - 1, n*step + L - 1] - I[t*stride - 1, n*step - 1]
// with I[-1, .] = I[., -1] = 0.
inline Matrix conv_fast(const FeatureMap& input, const CondensedFilter& phi,
                        OpCounter* counter = nullptr) {
    check_condensed(phi);
    const SamplingSpec& s = phi.spec;
    require(input.cols == s.in_channels, "conv_fast: input channel mismatch");
    const int filter_len = s.filter_len;
    const int count = s.sampled_filters();
    const int step = s.effective_stride();
    const int cond_len = s.condensed_len;
    const int cond_ch = s.condensed_channels;
    const int tile = s.channel_tile;
    const ConvGeometry g = conv_geometry(input.rows, filter_len, s.conv_stride, s.padding);

    Matrix out(g.out_len, count);
    const int ring_n = filter_len + 1;
    Matrix ring(ring_n, cond_len, 0.0);
    std::vector<double> wrapped(cond_ch), prow(cond_len);
    const std::vector<double> zero_row(static_cast<size_t>(s.in_channels), 0.0);

    // transposed condensed filter: the per-row inner products become axpy
    // passes over contiguous condensed positions (same summation order)
    Matrix phi_t(cond_ch, cond_len);
    for (int v = 0; v < cond_len; ++v)
        for (int j = 0; j < cond_ch; ++j) phi_t.at(j, v) = phi.values.at(v, j);

    for (int u = 0; u < g.padded_len; ++u) {
        const int src = u - g.pad_left;
        const double* frow =
            (src >= 0 && src < input.rows) ? input.row(src) : zero_row.data();

        // channel wrap (padding rows run through the same arithmetic)
        for (int j = 0; j < cond_ch; ++j) wrapped[j] = frow[j];
        for (int c = 1; c < tile; ++c) {
            const double* blk = frow + static_cast<size_t>(c) * cond_ch;
            for (int j = 0; j < cond_ch; ++j) wrapped[j] += blk[j];
        }

        // inner-product row
        {
            const double* col = phi_t.row(0);
            const double w0 = wrapped[0];
            for (int v = 0; v < cond_len; ++v) prow[v] = w0 * col[v];
        }
        for (int j = 1; j < cond_ch; ++j) {
            const double* col = phi_t.row(j);
            const double wj = wrapped[j];
            for (int v = 0; v < cond_len; ++v) prow[v] += wj * col[v];
        }

        // integral row
        double* irow = ring.row(u % ring_n);
        if (u == 0) {
            for (int v = 0; v < cond_len; ++v) irow[v] = prow[v];
        } else {
            const double* prev = ring.row((u - 1) % ring_n);
            irow[0] = prow[0];
            for (int v = 1; v < cond_len; ++v) irow[v] = prev[v - 1] + prow[v];
        }

        // emit every output row whose top lookup lands on this integral row
        if (u >= filter_len - 1) {
            const int start = u - (filter_len - 1);
            if (start % s.conv_stride == 0) {
                const int t = start / s.conv_stride;
                if (t < g.out_len) {
                    const double* top = irow;
                    const double* bot =
                        start >= 1 ? ring.row((start - 1) % ring_n) : nullptr;
                    double* orow = out.row(t);
                    if (bot) {
                        orow[0] = top[filter_len - 1];
                        for (int n = 1; n < count; ++n)
                            orow[n] = top[n * step + filter_len - 1] - bot[n * step - 1];
                    } else {
                        for (int n = 0; n < count; ++n)
                            orow[n] = top[n * step + filter_len - 1];
                    }
                    if (counter) counter->retrieval_ops += count;
                }
            }
        }
    }
    if (counter) {
        counter->wrap_adds +=
            static_cast<std::int64_t>(g.padded_len) * cond_ch * (tile - 1);
        counter->inner_product_multadds +=
            static_cast<std::int64_t>(g.padded_len) * cond_len * cond_ch;
        counter->integral_updates += static_cast<std::int64_t>(g.padded_len) * cond_len;
    }
    return out;
}

// 1x1 convolution: out[t, n] = sum_m input[t, m] * weights[m, n]
inline Matrix pointwise_conv(const FeatureMap& input, const Matrix& weights,
                             OpCounter* counter = nullptr) {
    require(input.cols == weights.rows, "pointwise conv: channel mismatch");
    Matrix out(input.rows, weights.cols);
    for (int t = 0; t < input.rows; ++t) {
        const double* frow = input.row(t);
        double* orow = out.row(t);
        for (int m = 0; m < weights.rows; ++m) {
            const double x = frow[m];
            const double* wrow = weights.row(m);
            for (int n = 0; n < weights.cols; ++n) orow[n] += x * wrow[n];
        }
    }
    if (counter)
        counter->pointwise_multadds +=
            static_cast<std::int64_t>(input.rows) * weights.rows * weights.cols;
    return out;
}

// Naive 2D convolution over a materialized 2D bank, stride 1.
// Input and output are (width, height, channels) tensors.
inline Tensor3 conv2d_naive(const Tensor3& input, const FilterBank2D& bank,
                            Padding padding) {
    require(input.d2 == bank.channels, "conv2d: input/filter channel mismatch");
    int pad_x = 0, pad_y = 0, out_w = 0, out_h = 0;
    if (padding == Padding::same) {
        pad_x = (bank.w - 1) / 2;
        pad_y = (bank.h - 1) / 2;
        out_w = input.d0;
        out_h = input.d1;
    } else {
        require(input.d0 >= bank.w && input.d1 >= bank.h,
                "conv2d: input smaller than filter (valid padding)");
        out_w = input.d0 - bank.w + 1;
        out_h = input.d1 - bank.h + 1;
    }
    Tensor3 out(out_w, out_h, bank.count);
    for (int x = 0; x < out_w; ++x)
        for (int y = 0; y < out_h; ++y) {
            double* orow = out.ptr(x, y);
            for (int dx = 0; dx < bank.w; ++dx)
                for (int dy = 0; dy < bank.h; ++dy) {
                    const int ix = x + dx - pad_x;
                    const int iy = y + dy - pad_y;
                    if (ix < 0 || iy < 0 || ix >= input.d0 || iy >= input.d1) continue;
                    const double* frow = input.ptr(ix, iy);
                    for (int m = 0; m < bank.channels; ++m) {
                        const double v = frow[m];
                        for (int n = 0; n < bank.count; ++n)
                            orow[n] += v * bank.at(dx, dy, m, n);
                    }
                }
        }
    return out;
}

} // namespace wsnet
