#pragma once

#include "wsnet/sampling.hpp"
#include "wsnet/tensor.hpp"

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

// INI-style network/training configuration.
//
//   [net]    input_len, channels, classes
//   [layer <name>]
//            kind = conv|fc|pointwise|relu|tanh|maxpool|batchnorm|dropout|softmax
//            conv: L, N, S, C, D, stride, relu, bn, pool, pool_k, dropout_keep
//                  (s_comp / c_comp derive S / C from compactness targets)
//            fc:   L (input features), N (outputs), S, relu, dropout_keep
//   [train]  lr, batch, iters, seed, init_std, eval_interval
//
// Convenience keys on conv/fc expand into the implied relu / batch-norm /
// max-pool / dropout layers, in that order.

namespace wsnet {

struct TrainHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 64;
    double init_std = 0.01;
    std::int64_t iters = 1000;
    std::uint64_t seed = 0;
    int eval_interval = 100;

    bool operator==(const TrainHyper&) const = default;
};

enum class LayerKind { conv, fc, pointwise, relu, tanh_act, maxpool, batchnorm, dropout, softmax };

inline const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::fc: return "fc";
        case LayerKind::pointwise: return "pointwise";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh_act: return "tanh";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

struct LayerDef {
    std::string name;
    LayerKind kind = LayerKind::conv;
    int L = 0;            // filter length (conv) or input features (fc)
    int N = 0;            // filter count / output features
    int S = 0;            // sampling stride; 0 = conventional (S = L)
    int C = 1;            // channel tile factor
    int D = 1;            // denser-sampling factor
    int stride = 1;       // conv output stride
    int s_comp = 0;       // spatial compactness target (alternative to S)
    int c_comp = 0;       // channel compactness target (alternative to C)
    bool relu_after = false;
    bool bn_after = false;
    bool pool_after = false;
    int pool_k = 2;
    double dropout_keep = 1.0;

    bool operator==(const LayerDef&) const = default;
};

struct NetworkSpec {
    std::int64_t input_len = 0;
    int channels = 1;
    int classes = 0;
    std::vector<LayerDef> defs;
    TrainHyper hyper;
    std::vector<std::string> notes; // compactness-derivation clamps etc.

    bool operator==(const NetworkSpec& o) const {
        return input_len == o.input_len && channels == o.channels && classes == o.classes &&
               defs == o.defs && hyper == o.hyper;
    }
};

// One runtime operation after expanding the convenience keys.
struct AtomicOp {
    LayerKind kind;
    std::string name;
    SamplingSpec spec;              // conv
    int fc_in = 0, fc_out = 0, fc_stride = 0;
    int pw_in = 0, pw_out = 0;      // pointwise
    int pool_k = 2, pool_stride = 2;
    double keep = 1.0;              // dropout
    int channels = 0;               // output channel count after this op
};

namespace detail {

inline int largest_divisor_leq(int value, int cap) {
    for (int d = std::min(cap, value); d >= 1; --d)
        if (value % d == 0) return d;
    return 1;
}

} // namespace detail

// Resolves compactness targets against the actual channel chain and expands
// every definition into atomic ops. Populates spec.notes with any clamps.
inline std::vector<AtomicOp> expand_spec(NetworkSpec& spec) {
    std::vector<AtomicOp> ops;
    int channels = spec.channels;
    spec.notes.clear();
    for (LayerDef& def : spec.defs) {
        switch (def.kind) {
            case LayerKind::conv: {
                int stride_s = def.S;
                if (def.s_comp > 0) {
                    if (def.s_comp >= def.L) {
                        stride_s = 1;
                        if (def.s_comp > def.L)
                            spec.notes.push_back(def.name +
                                                 ": spatial compactness target " +
                                                 std::to_string(def.s_comp) +
                                                 " clamped to filter length " +
                                                 std::to_string(def.L));
                    } else {
                        require(def.L % def.s_comp == 0,
                                "layer " + def.name +
                                    ": spatial compactness target must divide the filter length");
                        stride_s = def.L / def.s_comp;
                    }
                }
                int tile = def.C;
                if (def.c_comp > 0) {
                    tile = detail::largest_divisor_leq(channels, def.c_comp);
                    if (tile != def.c_comp)
                        spec.notes.push_back(def.name + ": channel compactness target " +
                                             std::to_string(def.c_comp) + " clamped to " +
                                             std::to_string(tile) + " (input channels " +
                                             std::to_string(channels) + ")");
                }
                SamplingParams p;
                p.filter_len = def.L;
                p.num_filters = def.N;
                p.sampling_stride = stride_s;
                p.channel_tile = tile;
                p.in_channels = channels;
                p.conv_stride = def.stride;
                p.denser_factor = def.D;
                AtomicOp op;
                op.kind = LayerKind::conv;
                op.name = def.name;
                try {
                    op.spec = make_sampling_spec(p);
                } catch (const validation_error& e) {
                    throw validation_error("layer " + def.name + ": " + e.what());
                }
                def.S = stride_s;   // canonical form carries resolved values
                def.C = tile;
                def.s_comp = 0;
                def.c_comp = 0;
                op.channels = op.spec.sampled_filters();
                ops.push_back(op);
                if (def.D > 1) {
                    AtomicOp proj;
                    proj.kind = LayerKind::pointwise;
                    proj.name = def.name + ".proj";
                    proj.pw_in = op.spec.sampled_filters();
                    proj.pw_out = def.N;
                    proj.channels = def.N;
                    ops.push_back(proj);
                }
                channels = def.N;
                break;
            }
            case LayerKind::fc: {
                AtomicOp op;
                op.kind = LayerKind::fc;
                op.name = def.name;
                op.fc_in = def.L;
                op.fc_out = def.N;
                op.fc_stride = def.S > 0 ? def.S : def.L;
                require(op.fc_stride >= 1 && op.fc_stride <= op.fc_in,
                        "layer " + def.name + ": fc sampling stride must be in [1, inputs]");
                channels = def.N;
                op.channels = channels;
                ops.push_back(op);
                break;
            }
            case LayerKind::pointwise: {
                AtomicOp op;
                op.kind = LayerKind::pointwise;
                op.name = def.name;
                op.pw_in = channels;
                op.pw_out = def.N;
                channels = def.N;
                op.channels = channels;
                ops.push_back(op);
                break;
            }
            case LayerKind::maxpool: {
                AtomicOp op;
                op.kind = LayerKind::maxpool;
                op.name = def.name;
                op.pool_k = def.pool_k;
                op.channels = channels;
                ops.push_back(op);
                break;
            }
            case LayerKind::dropout: {
                AtomicOp op;
                op.kind = LayerKind::dropout;
                op.name = def.name;
                op.keep = def.dropout_keep;
                op.channels = channels;
                ops.push_back(op);
                break;
            }
            default: {
                AtomicOp op;
                op.kind = def.kind;
                op.name = def.name;
                op.channels = channels;
                ops.push_back(op);
                break;
            }
        }
        // convenience post-ops for conv/fc
        if (def.kind == LayerKind::conv || def.kind == LayerKind::fc) {
            if (def.relu_after) {
                AtomicOp op;
                op.kind = LayerKind::relu;
                op.name = def.name + ".relu";
                op.channels = channels;
                ops.push_back(op);
            }
            if (def.bn_after) {
                AtomicOp op;
                op.kind = LayerKind::batchnorm;
                op.name = def.name + ".bn";
                op.channels = channels;
                ops.push_back(op);
            }
            if (def.pool_after) {
                AtomicOp op;
                op.kind = LayerKind::maxpool;
                op.name = def.name + ".pool";
                op.pool_k = def.pool_k;
                op.channels = channels;
                ops.push_back(op);
            }
            if (def.dropout_keep < 1.0) {
                AtomicOp op;
                op.kind = LayerKind::dropout;
                op.name = def.name + ".dropout";
                op.keep = def.dropout_keep;
                op.channels = channels;
                ops.push_back(op);
            }
        }
    }
    return ops;
}

namespace detail {

struct IniLine {
    int number;
    std::string key;
    std::string value;
};

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::int64_t parse_int(const IniLine& ln) {
    try {
        size_t pos = 0;
        std::int64_t v = std::stoll(ln.value, &pos);
        if (pos != ln.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw validation_error("line " + std::to_string(ln.number) + ": '" + ln.key +
                               "' expects an integer, got '" + ln.value + "'");
    }
}

inline double parse_float(const IniLine& ln) {
    try {
        size_t pos = 0;
        double v = std::stod(ln.value, &pos);
        if (pos != ln.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw validation_error("line " + std::to_string(ln.number) + ": '" + ln.key +
                               "' expects a number, got '" + ln.value + "'");
    }
}

inline LayerKind parse_kind(const IniLine& ln) {
    const std::string& v = ln.value;
    if (v == "conv") return LayerKind::conv;
    if (v == "fc") return LayerKind::fc;
    if (v == "pointwise") return LayerKind::pointwise;
    if (v == "relu") return LayerKind::relu;
    if (v == "tanh") return LayerKind::tanh_act;
    if (v == "maxpool") return LayerKind::maxpool;
    if (v == "batchnorm") return LayerKind::batchnorm;
    if (v == "dropout") return LayerKind::dropout;
    if (v == "softmax") return LayerKind::softmax;
    throw validation_error("line " + std::to_string(ln.number) + ": unknown layer kind '" +
                           v + "'");
}

} // namespace detail

inline NetworkSpec parse_config(const std::string& text) {
    using detail::IniLine;
    NetworkSpec spec;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;

    enum class Section { none, net, train, layer };
    Section section = Section::none;
    LayerDef cur;
    bool have_layer = false;
    bool cur_relu_set = false;
    std::vector<std::string> seen_names;

    auto flush_layer = [&]() {
        if (!have_layer) return;
        if (cur.kind == LayerKind::conv || cur.kind == LayerKind::fc) {
            require(cur.L >= 1, "layer " + cur.name + ": missing or invalid L");
            require(cur.N >= 1, "layer " + cur.name + ": missing or invalid N");
        }
        if (!cur_relu_set && cur.kind == LayerKind::conv) cur.relu_after = true;
        for (const auto& n : seen_names)
            require(n != cur.name, "duplicate layer name '" + cur.name + "'");
        seen_names.push_back(cur.name);
        spec.defs.push_back(cur);
        have_layer = false;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (size_t h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            require(line.back() == ']',
                    "line " + std::to_string(lineno) + ": unterminated section header");
            std::string inner = detail::trim(line.substr(1, line.size() - 2));
            flush_layer();
            if (inner == "net") {
                section = Section::net;
            } else if (inner == "train") {
                section = Section::train;
            } else if (inner.rfind("layer ", 0) == 0) {
                section = Section::layer;
                cur = LayerDef{};
                cur.name = detail::trim(inner.substr(6));
                require(!cur.name.empty(),
                        "line " + std::to_string(lineno) + ": layer section needs a name");
                have_layer = true;
                cur_relu_set = false;
            } else {
                throw validation_error("line " + std::to_string(lineno) +
                                       ": unknown section '" + inner + "'");
            }
            continue;
        }

        size_t eq = line.find('=');
        require(eq != std::string::npos,
                "line " + std::to_string(lineno) + ": expected key = value");
        IniLine ln{lineno, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1))};
        require(!ln.key.empty() && !ln.value.empty(),
                "line " + std::to_string(lineno) + ": expected key = value");

        switch (section) {
            case Section::none:
                throw validation_error("line " + std::to_string(lineno) +
                                       ": key outside any section");
            case Section::net:
                if (ln.key == "input_len") spec.input_len = detail::parse_int(ln);
                else if (ln.key == "channels") spec.channels = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "classes") spec.classes = static_cast<int>(detail::parse_int(ln));
                else
                    throw validation_error("line " + std::to_string(lineno) +
                                           ": unknown [net] key '" + ln.key + "'");
                break;
            case Section::train:
                if (ln.key == "lr") spec.hyper.lr = detail::parse_float(ln);
                else if (ln.key == "batch") spec.hyper.batch = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "iters") spec.hyper.iters = detail::parse_int(ln);
                else if (ln.key == "seed") spec.hyper.seed = static_cast<std::uint64_t>(detail::parse_int(ln));
                else if (ln.key == "init_std") spec.hyper.init_std = detail::parse_float(ln);
                else if (ln.key == "eval_interval") spec.hyper.eval_interval = static_cast<int>(detail::parse_int(ln));
                else
                    throw validation_error("line " + std::to_string(lineno) +
                                           ": unknown [train] key '" + ln.key + "'");
                break;
            case Section::layer:
                if (ln.key == "kind") cur.kind = detail::parse_kind(ln);
                else if (ln.key == "L") cur.L = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "N") cur.N = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "S") {
                    cur.S = static_cast<int>(detail::parse_int(ln));
                    require(cur.S >= 1, "line " + std::to_string(lineno) + ": layer " +
                                            cur.name + ": S must be >= 1");
                }
                else if (ln.key == "C") {
                    cur.C = static_cast<int>(detail::parse_int(ln));
                    require(cur.C >= 1, "line " + std::to_string(lineno) + ": layer " +
                                            cur.name + ": C must be >= 1");
                }
                else if (ln.key == "D") {
                    cur.D = static_cast<int>(detail::parse_int(ln));
                    require(cur.D >= 1, "line " + std::to_string(lineno) + ": layer " +
                                            cur.name + ": D must be >= 1");
                }
                else if (ln.key == "stride") cur.stride = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "s_comp") cur.s_comp = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "c_comp") cur.c_comp = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "relu") { cur.relu_after = detail::parse_int(ln) != 0; cur_relu_set = true; }
                else if (ln.key == "bn") cur.bn_after = detail::parse_int(ln) != 0;
                else if (ln.key == "pool") cur.pool_after = detail::parse_int(ln) != 0;
                else if (ln.key == "pool_k") cur.pool_k = static_cast<int>(detail::parse_int(ln));
                else if (ln.key == "dropout_keep") cur.dropout_keep = detail::parse_float(ln);
                else
                    throw validation_error("line " + std::to_string(lineno) +
                                           ": unknown layer key '" + ln.key + "'");
                break;
        }
    }
    flush_layer();

    require(!spec.defs.empty(), "config: no layers");
    for (const LayerDef& d : spec.defs) {
        if (d.kind == LayerKind::dropout || d.dropout_keep < 1.0)
            require(d.dropout_keep > 0.0 && d.dropout_keep <= 1.0,
                    "layer " + d.name + ": dropout_keep must be in (0, 1]");
        if (d.pool_after || d.kind == LayerKind::maxpool)
            require(d.pool_k >= 1, "layer " + d.name + ": pool_k must be >= 1");
    }
    require(spec.hyper.lr > 0, "train: lr must be > 0");
    require(spec.hyper.batch >= 1, "train: batch must be >= 1");

    // Validate the full geometry now so config errors surface with this parse.
    NetworkSpec probe = spec;
    expand_spec(probe);
    spec.notes = probe.notes;
    // keep resolved S/C in the canonical defs
    for (size_t i = 0; i < spec.defs.size(); ++i) {
        spec.defs[i].S = probe.defs[i].S;
        spec.defs[i].C = probe.defs[i].C;
        spec.defs[i].s_comp = 0;
        spec.defs[i].c_comp = 0;
    }
    return spec;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string print_config(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "[net]\n";
    out << "input_len = " << spec.input_len << "\n";
    out << "channels = " << spec.channels << "\n";
    out << "classes = " << spec.classes << "\n";
    for (const LayerDef& d : spec.defs) {
        out << "\n[layer " << d.name << "]\n";
        out << "kind = " << kind_name(d.kind) << "\n";
        if (d.kind == LayerKind::conv || d.kind == LayerKind::fc) {
            out << "L = " << d.L << "\n";
            out << "N = " << d.N << "\n";
            if (d.S > 0) out << "S = " << d.S << "\n";
            if (d.kind == LayerKind::conv) {
                if (d.C != 1) out << "C = " << d.C << "\n";
                if (d.D != 1) out << "D = " << d.D << "\n";
                if (d.stride != 1) out << "stride = " << d.stride << "\n";
            }
            out << "relu = " << (d.relu_after ? 1 : 0) << "\n";
            if (d.bn_after) out << "bn = 1\n";
            if (d.pool_after) out << "pool = 1\npool_k = " << d.pool_k << "\n";
            if (d.dropout_keep < 1.0)
                out << "dropout_keep = " << format_double(d.dropout_keep) << "\n";
        } else if (d.kind == LayerKind::pointwise) {
            out << "N = " << d.N << "\n";
        } else if (d.kind == LayerKind::maxpool) {
            out << "pool_k = " << d.pool_k << "\n";
        } else if (d.kind == LayerKind::dropout) {
            out << "dropout_keep = " << format_double(d.dropout_keep) << "\n";
        }
    }
    out << "\n[train]\n";
    out << "lr = " << format_double(spec.hyper.lr) << "\n";
    out << "batch = " << spec.hyper.batch << "\n";
    out << "iters = " << spec.hyper.iters << "\n";
    out << "seed = " << spec.hyper.seed << "\n";
    out << "init_std = " << format_double(spec.hyper.init_std) << "\n";
    out << "eval_interval = " << spec.hyper.eval_interval << "\n";
    return out.str();
}

} // namespace wsnet
