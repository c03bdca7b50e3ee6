#pragma once

#include "wsnet/config.hpp"
#include "wsnet/conv.hpp"
#include "wsnet/sampling.hpp"
#include "wsnet/tensor.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

// Runtime network: an ordered list of atomic layers built from a NetworkSpec.
// Forward runs per-sample feature maps through the list (batch norm works
// across the whole batch); backward walks the list in reverse, accumulating
// gradients into the condensed parameter blocks through their position maps.

namespace wsnet {

using Rng = std::mt19937_64;

enum class Mode { train, eval };

struct Layer {
    AtomicOp op;
    // conv parameters
    Matrix phi, phi_grad;
    // pointwise parameters
    Matrix pw, pw_grad;
    // fc parameters (condensed vector)
    std::vector<double> fc_phi, fc_phi_grad;
    // batch norm parameters and running stats
    std::vector<double> gamma, beta, gamma_grad, beta_grad;
    std::vector<double> run_mean, run_var;
    bool from_quantized = false;
};

// Handle to one serializable parameter block.
struct ParamRef {
    std::string name;
    std::vector<double>* values;
    std::vector<double>* grad;    // null for running stats
    std::vector<int> shape;
    bool quantize_eligible;       // condensed / dense weights, not BN
    Layer* layer;
};

struct Network {
    NetworkSpec spec;
    std::vector<Layer> layers;
    bool fast_forward = false;    // conv forward via the integral-image path

    std::vector<ParamRef> param_blocks() {
        std::vector<ParamRef> refs;
        for (Layer& l : layers) {
            switch (l.op.kind) {
                case LayerKind::conv:
                    refs.push_back({l.op.name + ".phi", &l.phi.data, &l.phi_grad.data,
                                    {l.phi.rows, l.phi.cols}, true, &l});
                    break;
                case LayerKind::pointwise:
                    refs.push_back({l.op.name + ".w", &l.pw.data, &l.pw_grad.data,
                                    {l.pw.rows, l.pw.cols}, true, &l});
                    break;
                case LayerKind::fc:
                    refs.push_back({l.op.name + ".phi", &l.fc_phi, &l.fc_phi_grad,
                                    {static_cast<int>(l.fc_phi.size())}, true, &l});
                    break;
                case LayerKind::batchnorm:
                    refs.push_back({l.op.name + ".gamma", &l.gamma, &l.gamma_grad,
                                    {l.op.channels}, false, &l});
                    refs.push_back({l.op.name + ".beta", &l.beta, &l.beta_grad,
                                    {l.op.channels}, false, &l});
                    refs.push_back({l.op.name + ".running_mean", &l.run_mean, nullptr,
                                    {l.op.channels}, false, &l});
                    refs.push_back({l.op.name + ".running_var", &l.run_var, nullptr,
                                    {l.op.channels}, false, &l});
                    break;
                default:
                    break;
            }
        }
        return refs;
    }
};

inline Network build_network(const NetworkSpec& spec) {
    Network net;
    net.spec = spec;
    NetworkSpec scratch = spec;
    for (AtomicOp& op : expand_spec(scratch)) {
        Layer l;
        l.op = op;
        switch (op.kind) {
            case LayerKind::conv:
                l.phi = Matrix(op.spec.condensed_len, op.spec.condensed_channels);
                l.phi_grad = l.phi;
                break;
            case LayerKind::pointwise:
                l.pw = Matrix(op.pw_in, op.pw_out);
                l.pw_grad = l.pw;
                break;
            case LayerKind::fc:
                l.fc_phi.assign(fc_condensed_len(op.fc_in, op.fc_out, op.fc_stride), 0.0);
                l.fc_phi_grad = l.fc_phi;
                break;
            case LayerKind::batchnorm:
                l.gamma.assign(op.channels, 1.0);
                l.beta.assign(op.channels, 0.0);
                l.gamma_grad.assign(op.channels, 0.0);
                l.beta_grad.assign(op.channels, 0.0);
                l.run_mean.assign(op.channels, 0.0);
                l.run_var.assign(op.channels, 1.0);
                break;
            default:
                break;
        }
        net.layers.push_back(std::move(l));
    }
    return net;
}

inline void init_network(Network& net, Rng& rng, double init_std) {
    std::normal_distribution<double> dist(0.0, init_std);
    for (Layer& l : net.layers) {
        for (double& v : l.phi.data) v = dist(rng);
        for (double& v : l.pw.data) v = dist(rng);
        for (double& v : l.fc_phi) v = dist(rng);
        // batch norm keeps scale 1 / shift 0
    }
}

// --------------------------------------------------------------------------
// Tied gradients (the position-map scatter)
// --------------------------------------------------------------------------

// grad_phi[i, j] = sum over tied bank entries of grad_bank[l, m, n]
inline Matrix grad_condensed(const Tensor3& grad_bank, const PositionMap& pm) {
    Matrix g(pm.condensed_len, pm.condensed_channels);
    for (int i = 0; i < pm.condensed_len; ++i)
        for (int j = 0; j < pm.condensed_channels; ++j) {
            double s = 0.0;
            for (const KernelIndex& k : pm.cell(i, j))
                s += grad_bank.at(k.pos, k.ch, k.filter);
            g.at(i, j) = s;
        }
    return g;
}

// Same scatter by direct index arithmetic; += into phi_grad.
inline void scatter_bank_grad(const Tensor3& grad_bank, const SamplingSpec& spec,
                              Matrix& phi_grad) {
    require(grad_bank.d0 == spec.filter_len && grad_bank.d1 == spec.in_channels &&
                grad_bank.d2 == spec.sampled_filters(),
            "scatter: bank gradient shape mismatch");
    const int step = spec.effective_stride();
    for (int l = 0; l < spec.filter_len; ++l)
        for (int m = 0; m < spec.in_channels; ++m) {
            const int j = m % spec.condensed_channels;
            const double* row = grad_bank.ptr(l, m);
            for (int n = 0; n < spec.sampled_filters(); ++n)
                phi_grad.at(n * step + l, j) += row[n];
        }
}

// --------------------------------------------------------------------------
// Loss
// --------------------------------------------------------------------------

inline double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    require(static_cast<int>(labels.size()) == logits.rows,
            "cross entropy: batch size mismatch");
    double total = 0.0;
    for (int b = 0; b < logits.rows; ++b) {
        require(labels[b] >= 0 && labels[b] < logits.cols,
                "cross entropy: label out of range");
        const double* row = logits.row(b);
        double mx = row[0];
        for (int k = 1; k < logits.cols; ++k) mx = std::max(mx, row[k]);
        double lse = 0.0;
        for (int k = 0; k < logits.cols; ++k) lse += std::exp(row[k] - mx);
        total += std::log(lse) - (row[labels[b]] - mx);
    }
    return total / logits.rows;
}

// d(mean cross entropy)/d logits, times loss_scale.
inline Matrix cross_entropy_grad(const Matrix& logits, const std::vector<int>& labels,
                                 double loss_scale = 1.0) {
    Matrix g(logits.rows, logits.cols);
    for (int b = 0; b < logits.rows; ++b) {
        const double* row = logits.row(b);
        double* grow = g.row(b);
        double mx = row[0];
        for (int k = 1; k < logits.cols; ++k) mx = std::max(mx, row[k]);
        double lse = 0.0;
        for (int k = 0; k < logits.cols; ++k) lse += std::exp(row[k] - mx);
        for (int k = 0; k < logits.cols; ++k)
            grow[k] = std::exp(row[k] - mx) / lse * loss_scale / logits.rows;
        grow[labels[b]] -= loss_scale / logits.rows;
    }
    return g;
}

inline int argmax_row(const double* row, int n) {
    int best = 0;
    for (int k = 1; k < n; ++k)
        if (row[k] > row[best]) best = k;   // ties keep the lowest index
    return best;
}

// --------------------------------------------------------------------------
// Forward
// --------------------------------------------------------------------------

struct LayerCache {
    std::vector<Matrix> in;
    std::vector<Matrix> out;                 // kept for tanh / softmax only
    std::vector<std::vector<int>> pool_src;  // flat (t_out * ch) -> input row
    std::vector<Matrix> mask;                // dropout
    std::vector<double> bn_mean, bn_var;
    std::vector<Matrix> xhat;
    FilterBank bank;                         // conv: bank used in this pass
    Matrix fc_w;                             // fc: sampled weight matrix
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Mode mode = Mode::train;
    int batch = 0;
};

namespace detail {

inline Matrix maxpool_forward(const Matrix& x, int k, int stride,
                              std::vector<int>* src, const std::string& name) {
    const int t_in = x.rows;
    require(t_in >= 1, "layer " + name + ": empty input");
    const int t_out = (t_in + stride - 1) / stride;
    const int total_pad = std::max(0, (t_out - 1) * stride + k - t_in);
    require(k <= t_in + total_pad, "layer " + name + ": pool window larger than padded input");
    const int pad_left = total_pad / 2;
    Matrix y(t_out, x.cols);
    if (src) src->assign(static_cast<size_t>(t_out) * x.cols, -1);
    for (int t = 0; t < t_out; ++t) {
        const int lo = std::max(0, t * stride - pad_left);
        const int hi = std::min(t_in, t * stride - pad_left + k);
        require(lo < hi, "layer " + name + ": pool window larger than padded input");
        for (int m = 0; m < x.cols; ++m) {
            double best = x.at(lo, m);
            int best_t = lo;
            for (int u = lo + 1; u < hi; ++u)
                if (x.at(u, m) > best) {
                    best = x.at(u, m);
                    best_t = u;
                }
            y.at(t, m) = best;
            if (src) (*src)[static_cast<size_t>(t) * x.cols + m] = best_t;
        }
    }
    return y;
}

inline void flatten_to_row(const Matrix& x, Matrix& row) {
    row = Matrix(1, static_cast<int>(x.size()));
    std::copy(x.data.begin(), x.data.end(), row.data.begin());
}

} // namespace detail

// Runs the batch through the network. Returns (batch, classes) logits; the
// final layer must produce a single spatial position per sample.
inline Matrix forward_network(Network& net, const std::vector<Matrix>& batch, Mode mode,
                              ForwardCache* cache = nullptr, Rng* rng = nullptr) {
    require(!batch.empty(), "forward: empty batch");
    const int bsz = static_cast<int>(batch.size());
    if (cache) {
        cache->layers.assign(net.layers.size(), LayerCache{});
        cache->mode = mode;
        cache->batch = bsz;
    }

    std::vector<Matrix> acts = batch;
    for (size_t li = 0; li < net.layers.size(); ++li) {
        Layer& layer = net.layers[li];
        const AtomicOp& op = layer.op;
        LayerCache* lc = cache ? &cache->layers[li] : nullptr;
        if (lc) lc->in = acts;

        switch (op.kind) {
            case LayerKind::conv: {
                if (acts[0].cols != op.spec.in_channels)
                    throw validation_error("layer " + op.name + ": expected " +
                                           std::to_string(op.spec.in_channels) +
                                           " channels, got " + std::to_string(acts[0].cols));
                CondensedFilter phi{layer.phi, op.spec};
                FilterBank bank;
                if (!net.fast_forward || lc) bank = sample_filters(phi);
                for (int b = 0; b < bsz; ++b)
                    acts[b] = net.fast_forward
                                  ? conv_fast(acts[b], phi)
                                  : conv_naive(acts[b], bank, op.spec.conv_stride,
                                               op.spec.padding);
                if (lc) lc->bank = std::move(bank);
                break;
            }
            case LayerKind::pointwise: {
                if (acts[0].cols != op.pw_in)
                    throw validation_error("layer " + op.name + ": expected " +
                                           std::to_string(op.pw_in) + " channels, got " +
                                           std::to_string(acts[0].cols));
                for (int b = 0; b < bsz; ++b) acts[b] = pointwise_conv(acts[b], layer.pw);
                break;
            }
            case LayerKind::fc: {
                Matrix w = sample_fc(layer.fc_phi, op.fc_in, op.fc_out, op.fc_stride);
                for (int b = 0; b < bsz; ++b) {
                    Matrix row;
                    detail::flatten_to_row(acts[b], row);
                    if (row.cols != op.fc_in)
                        throw validation_error("layer " + op.name + ": expected " +
                                               std::to_string(op.fc_in) + " inputs, got " +
                                               std::to_string(row.cols));
                    acts[b] = pointwise_conv(row, w);
                }
                if (lc) lc->fc_w = std::move(w);
                break;
            }
            case LayerKind::relu: {
                for (int b = 0; b < bsz; ++b)
                    for (double& v : acts[b].data) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::tanh_act: {
                for (int b = 0; b < bsz; ++b)
                    for (double& v : acts[b].data) v = std::tanh(v);
                if (lc) lc->out = acts;
                break;
            }
            case LayerKind::maxpool: {
                if (lc) lc->pool_src.resize(bsz);
                for (int b = 0; b < bsz; ++b)
                    acts[b] = detail::maxpool_forward(acts[b], op.pool_k, op.pool_stride,
                                                      lc ? &lc->pool_src[b] : nullptr,
                                                      op.name);
                break;
            }
            case LayerKind::batchnorm: {
                const int ch = op.channels;
                if (acts[0].cols != ch)
                    throw validation_error("layer " + op.name + ": expected " +
                                           std::to_string(ch) + " channels, got " +
                                           std::to_string(acts[0].cols));
                std::vector<double> mean(ch, 0.0), var(ch, 0.0);
                if (mode == Mode::train) {
                    std::int64_t count = 0;
                    for (int b = 0; b < bsz; ++b) count += acts[b].rows;
                    for (int b = 0; b < bsz; ++b)
                        for (int t = 0; t < acts[b].rows; ++t) {
                            const double* row = acts[b].row(t);
                            for (int m = 0; m < ch; ++m) mean[m] += row[m];
                        }
                    for (int m = 0; m < ch; ++m) mean[m] /= count;
                    for (int b = 0; b < bsz; ++b)
                        for (int t = 0; t < acts[b].rows; ++t) {
                            const double* row = acts[b].row(t);
                            for (int m = 0; m < ch; ++m) {
                                const double d = row[m] - mean[m];
                                var[m] += d * d;
                            }
                        }
                    for (int m = 0; m < ch; ++m) var[m] /= count;
                    for (int m = 0; m < ch; ++m) {
                        layer.run_mean[m] = 0.9 * layer.run_mean[m] + 0.1 * mean[m];
                        layer.run_var[m] = 0.9 * layer.run_var[m] + 0.1 * var[m];
                    }
                } else {
                    mean = layer.run_mean;
                    var = layer.run_var;
                }
                if (lc) {
                    lc->bn_mean = mean;
                    lc->bn_var = var;
                    lc->xhat.resize(bsz);
                }
                constexpr double kEps = 1e-5;
                for (int b = 0; b < bsz; ++b) {
                    Matrix xh(acts[b].rows, ch);
                    for (int t = 0; t < acts[b].rows; ++t) {
                        double* row = acts[b].row(t);
                        double* xrow = xh.row(t);
                        for (int m = 0; m < ch; ++m) {
                            const double nrm = (row[m] - mean[m]) / std::sqrt(var[m] + kEps);
                            xrow[m] = nrm;
                            row[m] = layer.gamma[m] * nrm + layer.beta[m];
                        }
                    }
                    if (lc) lc->xhat[b] = std::move(xh);
                }
                break;
            }
            case LayerKind::dropout: {
                if (mode == Mode::train) {
                    require(rng != nullptr, "layer " + op.name +
                                                ": dropout in train mode needs an rng");
                    std::uniform_real_distribution<double> u(0.0, 1.0);
                    if (lc) lc->mask.resize(bsz);
                    for (int b = 0; b < bsz; ++b) {
                        Matrix mask(acts[b].rows, acts[b].cols);
                        for (size_t i = 0; i < acts[b].size(); ++i) {
                            mask.data[i] = u(*rng) < op.keep ? 1.0 / op.keep : 0.0;
                            acts[b].data[i] *= mask.data[i];
                        }
                        if (lc) lc->mask[b] = std::move(mask);
                    }
                }
                break;
            }
            case LayerKind::softmax: {
                for (int b = 0; b < bsz; ++b)
                    for (int t = 0; t < acts[b].rows; ++t) {
                        double* row = acts[b].row(t);
                        double mx = row[0];
                        for (int m = 1; m < acts[b].cols; ++m) mx = std::max(mx, row[m]);
                        double sum = 0.0;
                        for (int m = 0; m < acts[b].cols; ++m) {
                            row[m] = std::exp(row[m] - mx);
                            sum += row[m];
                        }
                        for (int m = 0; m < acts[b].cols; ++m) row[m] /= sum;
                    }
                if (lc) lc->out = acts;
                break;
            }
        }
    }

    for (int b = 0; b < bsz; ++b)
        if (acts[b].rows != 1)
            throw validation_error("network output must have one spatial position; got " +
                                   std::to_string(acts[b].rows));
    Matrix logits(bsz, acts[0].cols);
    for (int b = 0; b < bsz; ++b)
        std::copy(acts[b].data.begin(), acts[b].data.end(), logits.row(b));
    return logits;
}

// --------------------------------------------------------------------------
// Backward
// --------------------------------------------------------------------------

inline void zero_grads(Network& net) {
    for (Layer& l : net.layers) {
        l.phi_grad.fill(0.0);
        l.pw_grad.fill(0.0);
        std::fill(l.fc_phi_grad.begin(), l.fc_phi_grad.end(), 0.0);
        std::fill(l.gamma_grad.begin(), l.gamma_grad.end(), 0.0);
        std::fill(l.beta_grad.begin(), l.beta_grad.end(), 0.0);
    }
}

namespace detail {

// Gradients of conv_naive wrt the bank and the input.
inline void conv_backward_sample(const Matrix& input, const FilterBank& bank,
                                 const SamplingSpec& spec, const Matrix& dout,
                                 Tensor3& dbank, Matrix& dinput) {
    const ConvGeometry g =
        conv_geometry(input.rows, spec.filter_len, spec.conv_stride, spec.padding);
    const Matrix padded = pad_rows(input, g.pad_left, g.pad_right);
    Matrix dpadded(padded.rows, padded.cols);
    const int count = spec.sampled_filters();
    for (int t = 0; t < g.out_len; ++t) {
        const double* grow = dout.row(t);
        for (int l = 0; l < spec.filter_len; ++l) {
            const int u = t * spec.conv_stride + l;
            const double* frow = padded.row(u);
            double* dfrow = dpadded.row(u);
            for (int m = 0; m < spec.in_channels; ++m) {
                const double x = frow[m];
                const double* krow = bank.values.ptr(l, m);
                double* dkrow = dbank.ptr(l, m);
                double acc = 0.0;
                for (int n = 0; n < count; ++n) {
                    dkrow[n] += x * grow[n];
                    acc += krow[n] * grow[n];
                }
                dfrow[m] += acc;
            }
        }
    }
    dinput = Matrix(input.rows, input.cols);
    for (int t = 0; t < input.rows; ++t) {
        const double* src = dpadded.row(t + g.pad_left);
        double* dst = dinput.row(t);
        for (int m = 0; m < input.cols; ++m) dst[m] = src[m];
    }
}

} // namespace detail

// Backpropagates d(loss)/d(logits) through the cached forward pass and fills
// every parameter gradient. Returns nothing; read grads off the layers.
inline void backward_network(Network& net, ForwardCache& cache, const Matrix& dlogits) {
    require(cache.layers.size() == net.layers.size(), "backward: stale cache");
    require(cache.mode == Mode::train, "backward: cache must come from a train-mode forward");
    const int bsz = cache.batch;
    require(dlogits.rows == bsz, "backward: gradient batch mismatch");

    zero_grads(net);
    std::vector<Matrix> grads(bsz);
    for (int b = 0; b < bsz; ++b) {
        grads[b] = Matrix(1, dlogits.cols);
        std::copy(dlogits.row(b), dlogits.row(b) + dlogits.cols, grads[b].data.begin());
    }

    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        Layer& layer = net.layers[li];
        const AtomicOp& op = layer.op;
        LayerCache& lc = cache.layers[li];

        switch (op.kind) {
            case LayerKind::conv: {
                Tensor3 dbank(op.spec.filter_len, op.spec.in_channels,
                              op.spec.sampled_filters());
                for (int b = 0; b < bsz; ++b) {
                    Matrix dinput;
                    detail::conv_backward_sample(lc.in[b], lc.bank, op.spec, grads[b],
                                                 dbank, dinput);
                    grads[b] = std::move(dinput);
                }
                scatter_bank_grad(dbank, op.spec, layer.phi_grad);
                break;
            }
            case LayerKind::pointwise: {
                for (int b = 0; b < bsz; ++b) {
                    const Matrix& x = lc.in[b];
                    const Matrix& dy = grads[b];
                    Matrix dx(x.rows, x.cols);
                    for (int t = 0; t < x.rows; ++t) {
                        const double* xrow = x.row(t);
                        const double* dyrow = dy.row(t);
                        double* dxrow = dx.row(t);
                        for (int m = 0; m < layer.pw.rows; ++m) {
                            const double* wrow = layer.pw.row(m);
                            double* gwrow = layer.pw_grad.row(m);
                            double acc = 0.0;
                            for (int n = 0; n < layer.pw.cols; ++n) {
                                gwrow[n] += xrow[m] * dyrow[n];
                                acc += wrow[n] * dyrow[n];
                            }
                            dxrow[m] = acc;
                        }
                    }
                    grads[b] = std::move(dx);
                }
                break;
            }
            case LayerKind::fc: {
                Matrix dw(op.fc_in, op.fc_out);
                for (int b = 0; b < bsz; ++b) {
                    Matrix row;
                    detail::flatten_to_row(lc.in[b], row);
                    const double* dyrow = grads[b].row(0);
                    Matrix dflat(1, op.fc_in);
                    for (int m = 0; m < op.fc_in; ++m) {
                        const double* wrow = lc.fc_w.row(m);
                        double* gwrow = dw.row(m);
                        double acc = 0.0;
                        const double x = row.at(0, m);
                        for (int n = 0; n < op.fc_out; ++n) {
                            gwrow[n] += x * dyrow[n];
                            acc += wrow[n] * dyrow[n];
                        }
                        dflat.at(0, m) = acc;
                    }
                    // restore the (T, M) shape of the layer input
                    Matrix dx(lc.in[b].rows, lc.in[b].cols);
                    std::copy(dflat.data.begin(), dflat.data.end(), dx.data.begin());
                    grads[b] = std::move(dx);
                }
                for (int k = 0; k < op.fc_out; ++k)
                    for (int r = 0; r < op.fc_in; ++r)
                        layer.fc_phi_grad[static_cast<size_t>(k) * op.fc_stride + r] +=
                            dw.at(r, k);
                break;
            }
            case LayerKind::relu: {
                for (int b = 0; b < bsz; ++b)
                    for (size_t i = 0; i < grads[b].size(); ++i)
                        if (lc.in[b].data[i] <= 0.0) grads[b].data[i] = 0.0;
                break;
            }
            case LayerKind::tanh_act: {
                for (int b = 0; b < bsz; ++b)
                    for (size_t i = 0; i < grads[b].size(); ++i) {
                        const double y = lc.out[b].data[i];
                        grads[b].data[i] *= 1.0 - y * y;
                    }
                break;
            }
            case LayerKind::maxpool: {
                for (int b = 0; b < bsz; ++b) {
                    Matrix dx(lc.in[b].rows, lc.in[b].cols);
                    const Matrix& dy = grads[b];
                    for (int t = 0; t < dy.rows; ++t)
                        for (int m = 0; m < dy.cols; ++m) {
                            const int src = lc.pool_src[b][static_cast<size_t>(t) * dy.cols + m];
                            dx.at(src, m) += dy.at(t, m);
                        }
                    grads[b] = std::move(dx);
                }
                break;
            }
            case LayerKind::batchnorm: {
                const int ch = op.channels;
                constexpr double kEps = 1e-5;
                std::int64_t count = 0;
                for (int b = 0; b < bsz; ++b) count += lc.in[b].rows;
                std::vector<double> sum_dy(ch, 0.0), sum_dy_xhat(ch, 0.0);
                for (int b = 0; b < bsz; ++b)
                    for (int t = 0; t < grads[b].rows; ++t) {
                        const double* dyrow = grads[b].row(t);
                        const double* xrow = lc.xhat[b].row(t);
                        for (int m = 0; m < ch; ++m) {
                            sum_dy[m] += dyrow[m];
                            sum_dy_xhat[m] += dyrow[m] * xrow[m];
                        }
                    }
                for (int m = 0; m < ch; ++m) {
                    layer.beta_grad[m] += sum_dy[m];
                    layer.gamma_grad[m] += sum_dy_xhat[m];
                }
                for (int b = 0; b < bsz; ++b) {
                    Matrix dx(grads[b].rows, ch);
                    for (int t = 0; t < grads[b].rows; ++t) {
                        const double* dyrow = grads[b].row(t);
                        const double* xrow = lc.xhat[b].row(t);
                        double* dxrow = dx.row(t);
                        for (int m = 0; m < ch; ++m) {
                            const double inv_std = 1.0 / std::sqrt(lc.bn_var[m] + kEps);
                            dxrow[m] = layer.gamma[m] * inv_std *
                                       (dyrow[m] - sum_dy[m] / count -
                                        xrow[m] * sum_dy_xhat[m] / count);
                        }
                    }
                    grads[b] = std::move(dx);
                }
                break;
            }
            case LayerKind::dropout: {
                if (cache.mode == Mode::train && !lc.mask.empty())
                    for (int b = 0; b < bsz; ++b)
                        for (size_t i = 0; i < grads[b].size(); ++i)
                            grads[b].data[i] *= lc.mask[b].data[i];
                break;
            }
            case LayerKind::softmax: {
                for (int b = 0; b < bsz; ++b) {
                    const Matrix& y = lc.out[b];
                    Matrix dx(y.rows, y.cols);
                    for (int t = 0; t < y.rows; ++t) {
                        const double* yrow = y.row(t);
                        const double* dyrow = grads[b].row(t);
                        double dot = 0.0;
                        for (int m = 0; m < y.cols; ++m) dot += yrow[m] * dyrow[m];
                        double* dxrow = dx.row(t);
                        for (int m = 0; m < y.cols; ++m)
                            dxrow[m] = yrow[m] * (dyrow[m] - dot);
                    }
                    grads[b] = std::move(dx);
                }
                break;
            }
        }
    }
}

} // namespace wsnet
