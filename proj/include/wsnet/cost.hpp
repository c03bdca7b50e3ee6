#pragma once

#include "wsnet/config.hpp"
#include "wsnet/conv.hpp"
#include "wsnet/sampling.hpp"

#include <cstdint>
#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

// Analytic parameter and multiply-add accounting.
//
// Conventions (matched exactly by the instrumented counters in conv.hpp):
//   naive conv cost  = T_out * L * M * N      (one fused multiply-add per tap,
//                                              counted at output positions)
//   fast conv cost   = T_pad * M~ * (C-1)     channel wrap
//                    + T_pad * M~ * L~        inner-product map
//                    + T_pad * L~             integral image (one update/cell)
//                    + T_out * N              lookups (one subtraction each)
// where T_pad is the padded row count the tables actually span and M~/L~ are
// the condensed channel count / length. The table stages run over every padded
// input row regardless of the conv stride; only the lookups are strided.

namespace wsnet {

struct LayerCost {
    std::string name;
    LayerKind kind = LayerKind::conv;
    std::int64_t t_in = 0, t_out = 0;
    std::int64_t params = 0;
    std::int64_t multadds_naive = 0;
    std::int64_t multadds_fast = 0;
    double compact = 1.0;
    double speedup = 1.0;
};

struct CostReport {
    std::vector<LayerCost> rows;
    std::int64_t total_params = 0;
    std::int64_t total_naive = 0;
    std::int64_t total_fast = 0;
    std::int64_t float_bytes = 0;  // 4 bytes/weight
    std::int64_t quant_bytes = 0;  // 1 byte/weight + 1024 bytes codebook per block
    std::vector<std::string> notes;
};

inline std::int64_t fast_conv_multadds(const SamplingSpec& s, std::int64_t t_in) {
    const ConvGeometry g =
        conv_geometry(static_cast<int>(t_in), s.filter_len, s.conv_stride, s.padding);
    const std::int64_t t_pad = g.padded_len;
    const std::int64_t t_out = g.out_len;
    return t_pad * s.condensed_channels * (s.channel_tile - 1) +
           t_pad * s.condensed_channels * s.condensed_len + t_pad * s.condensed_len +
           t_out * s.sampled_filters();
}

inline std::int64_t naive_conv_multadds(const SamplingSpec& s, std::int64_t t_in) {
    const ConvGeometry g =
        conv_geometry(static_cast<int>(t_in), s.filter_len, s.conv_stride, s.padding);
    return static_cast<std::int64_t>(g.out_len) * s.filter_len * s.in_channels *
           s.sampled_filters();
}

inline LayerCost layer_cost_naive(const SamplingSpec& s, std::int64_t t_in,
                                  const std::string& name = "conv") {
    LayerCost c;
    c.name = name;
    c.kind = LayerKind::conv;
    c.t_in = t_in;
    const ConvGeometry g =
        conv_geometry(static_cast<int>(t_in), s.filter_len, s.conv_stride, s.padding);
    c.t_out = g.out_len;
    c.params = static_cast<std::int64_t>(s.condensed_len) * s.condensed_channels;
    c.multadds_naive = naive_conv_multadds(s, t_in);
    c.compact = compactness(s);
    return c;
}

inline LayerCost layer_cost_fast(const SamplingSpec& s, std::int64_t t_in,
                                 const std::string& name = "conv") {
    LayerCost c = layer_cost_naive(s, t_in, name);
    c.multadds_fast = fast_conv_multadds(s, t_in);
    c.speedup = static_cast<double>(c.multadds_naive) / c.multadds_fast;
    return c;
}

inline double speedup(const SamplingSpec& s, std::int64_t t_in) {
    return static_cast<double>(naive_conv_multadds(s, t_in)) / fast_conv_multadds(s, t_in);
}

inline CostReport network_report(const NetworkSpec& spec, std::int64_t input_len) {
    require(input_len >= 1, "cost: input length must be >= 1");
    NetworkSpec scratch = spec;
    std::vector<AtomicOp> ops = expand_spec(scratch);
    CostReport rep;
    // derivation notes from this expansion plus any recorded at parse time
    rep.notes = spec.notes;
    for (const std::string& n : scratch.notes)
        if (std::find(rep.notes.begin(), rep.notes.end(), n) == rep.notes.end())
            rep.notes.push_back(n);

    std::int64_t t = input_len;
    for (const AtomicOp& op : ops) {
        switch (op.kind) {
            case LayerKind::conv: {
                LayerCost c = layer_cost_fast(op.spec, t, op.name);
                // Eq-2 compactness is quoted for the nominal filter count
                c.compact = compactness(op.spec);
                rep.rows.push_back(c);
                t = c.t_out;
                break;
            }
            case LayerKind::pointwise: {
                LayerCost c;
                c.name = op.name;
                c.kind = LayerKind::pointwise;
                c.t_in = c.t_out = t;
                c.params = static_cast<std::int64_t>(op.pw_in) * op.pw_out;
                c.multadds_naive = t * static_cast<std::int64_t>(op.pw_in) * op.pw_out;
                c.multadds_fast = c.multadds_naive;
                rep.rows.push_back(c);
                break;
            }
            case LayerKind::fc: {
                LayerCost c;
                c.name = op.name;
                c.kind = LayerKind::fc;
                c.t_in = t;
                c.t_out = 1;
                c.params = static_cast<std::int64_t>(
                    fc_condensed_len(op.fc_in, op.fc_out, op.fc_stride));
                c.multadds_naive = static_cast<std::int64_t>(op.fc_in) * op.fc_out;
                c.multadds_fast = c.multadds_naive;
                c.compact = static_cast<double>(op.fc_in) * op.fc_out / c.params;
                rep.rows.push_back(c);
                t = 1;
                break;
            }
            case LayerKind::maxpool:
                t = (t + op.pool_stride - 1) / op.pool_stride;
                break;
            default:
                break;
        }
    }

    for (const LayerCost& c : rep.rows) {
        rep.total_params += c.params;
        rep.total_naive += c.multadds_naive;
        rep.total_fast += c.multadds_fast;
        rep.float_bytes += 4 * c.params;
        rep.quant_bytes += c.params + 1024;
    }
    return rep;
}

// Validates that fc input features line up with the flattened activations.
inline void check_fc_flatten(const NetworkSpec& spec, std::int64_t input_len) {
    NetworkSpec scratch = spec;
    std::vector<AtomicOp> ops = expand_spec(scratch);
    std::int64_t t = input_len;
    int channels = spec.channels;
    for (const AtomicOp& op : ops) {
        switch (op.kind) {
            case LayerKind::conv: {
                const ConvGeometry g = conv_geometry(static_cast<int>(t), op.spec.filter_len,
                                                     op.spec.conv_stride, op.spec.padding);
                t = g.out_len;
                channels = op.spec.sampled_filters();
                break;
            }
            case LayerKind::pointwise:
                channels = op.pw_out;
                break;
            case LayerKind::fc:
                require(t * channels == op.fc_in,
                        "layer " + op.name + ": expects " + std::to_string(op.fc_in) +
                            " inputs but gets " + std::to_string(t * channels) +
                            " (length " + std::to_string(t) + " x " +
                            std::to_string(channels) + " channels)");
                t = 1;
                channels = op.fc_out;
                break;
            case LayerKind::maxpool:
                t = (t + op.pool_stride - 1) / op.pool_stride;
                break;
            default:
                break;
        }
    }
}

inline std::string format_count(std::int64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
}

inline void print_report(const CostReport& rep, std::ostream& out) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %-10s %10s %10s %12s %16s %16s %12s %9s",
                  "layer", "kind", "T_in", "T_out", "params", "multadds_naive",
                  "multadds_fast", "compactness", "speedup");
    out << line << "\n";
    for (const LayerCost& c : rep.rows) {
        std::snprintf(line, sizeof(line),
                      "%-12s %-10s %10lld %10lld %12lld %16lld %16lld %12.3f %9.3f",
                      c.name.c_str(), kind_name(c.kind), static_cast<long long>(c.t_in),
                      static_cast<long long>(c.t_out), static_cast<long long>(c.params),
                      static_cast<long long>(c.multadds_naive),
                      static_cast<long long>(c.multadds_fast), c.compact, c.speedup);
        out << line << "\n";
    }
    std::snprintf(line, sizeof(line), "%-12s %-10s %10s %10s %12lld %16lld %16lld %12s %9.3f",
                  "total", "", "", "", static_cast<long long>(rep.total_params),
                  static_cast<long long>(rep.total_naive),
                  static_cast<long long>(rep.total_fast), "",
                  rep.total_fast > 0
                      ? static_cast<double>(rep.total_naive) / rep.total_fast
                      : 1.0);
    out << line << "\n";
    std::snprintf(line, sizeof(line),
                  "model bytes: float32 %lld, quantized(8-bit + codebooks) %lld",
                  static_cast<long long>(rep.float_bytes),
                  static_cast<long long>(rep.quant_bytes));
    out << line << "\n";
    for (const std::string& n : rep.notes) out << "note: " << n << "\n";
}

inline void print_report_csv(const CostReport& rep, std::ostream& out) {
    out << "layer,params,multadds_naive,multadds_fast,compactness,speedup\n";
    char line[256];
    for (const LayerCost& c : rep.rows) {
        std::snprintf(line, sizeof(line), "%s,%lld,%lld,%lld,%.6f,%.6f", c.name.c_str(),
                      static_cast<long long>(c.params),
                      static_cast<long long>(c.multadds_naive),
                      static_cast<long long>(c.multadds_fast), c.compact, c.speedup);
        out << line << "\n";
    }
    std::snprintf(line, sizeof(line), "total,%lld,%lld,%lld,,",
                  static_cast<long long>(rep.total_params),
                  static_cast<long long>(rep.total_naive),
                  static_cast<long long>(rep.total_fast));
    out << line << "\n";
}

// Baseline-vs-network comparison lines (model size and mult-adds ratios).
inline void print_comparison(const CostReport& base, const CostReport& net,
                             std::ostream& out) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "size ratio vs baseline: %.3fx (params %lld -> %lld)",
                  static_cast<double>(base.total_params) / net.total_params,
                  static_cast<long long>(base.total_params),
                  static_cast<long long>(net.total_params));
    out << line << "\n";
    std::snprintf(line, sizeof(line),
                  "mult-adds ratio vs baseline: %.3fx (naive %lld -> fast %lld)",
                  static_cast<double>(base.total_naive) / net.total_fast,
                  static_cast<long long>(base.total_naive),
                  static_cast<long long>(net.total_fast));
    out << line << "\n";
}

} // namespace wsnet
