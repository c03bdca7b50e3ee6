#pragma once

#include "wsnet/config.hpp"
#include "wsnet/dataset.hpp"
#include "wsnet/network.hpp"
#include "wsnet/quantize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

// Binary model and dataset containers, little-endian regardless of host.
//
// Model (`WSNET001`):
//   magic[8] | u32 config_len | config text | u32 block_count |
//   per block: u32 name_len, name, u8 flag (0 float32 / 1 quantized-8bit),
//              u32 rank, u32 dims[rank],
//              payload: float32[count]            (flag 0)
//                       u8 codes[count] + 256 x float32 codebook  (flag 1)
//   | u32 crc32 of everything before
//
// The embedded config makes a model file self-describing, so evaluation needs
// no separate architecture input.
//
// Dataset (`WSDS0001`):
//   magic[8] | u32 count | u32 length | u32 classes |
//   per clip: u32 label + length x float32 samples

namespace wsnet {

namespace detail {

inline std::uint32_t crc32_update(std::uint32_t crc, const std::uint8_t* data, size_t n) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
};

struct ByteReader {
    const std::uint8_t* p;
    size_t n;
    size_t pos = 0;

    void need(size_t k, const char* what) {
        if (pos + k > n) throw validation_error(std::string("truncated file: ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return p[pos++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = static_cast<std::uint32_t>(p[pos]) |
                          (static_cast<std::uint32_t>(p[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(p[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(p[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    std::string str(size_t k, const char* what) {
        need(k, what);
        std::string s(reinterpret_cast<const char*>(p + pos), k);
        pos += k;
        return s;
    }
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw validation_error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw validation_error("write failed: " + path);
}

} // namespace detail

constexpr char kModelMagic[9] = "WSNET001";
constexpr char kDatasetMagic[9] = "WSDS0001";

inline std::vector<std::uint8_t> serialize_model(Network& net, bool quantize_weights) {
    detail::ByteWriter w;
    w.raw(kModelMagic, 8);
    const std::string cfg = print_config(net.spec);
    w.u32(static_cast<std::uint32_t>(cfg.size()));
    w.raw(cfg.data(), cfg.size());

    std::vector<ParamRef> blocks = net.param_blocks();
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (ParamRef& b : blocks) {
        w.u32(static_cast<std::uint32_t>(b.name.size()));
        w.raw(b.name.data(), b.name.size());
        const bool q = quantize_weights && b.quantize_eligible;
        w.u8(q ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(b.shape.size()));
        for (int d : b.shape) w.u32(static_cast<std::uint32_t>(d));
        if (q) {
            QuantizedBlock qb = quantize(*b.values, b.shape);
            w.raw(qb.codes.data(), qb.codes.size());
            for (double c : qb.codebook) w.f32(static_cast<float>(c));
        } else {
            for (double v : *b.values) w.f32(static_cast<float>(v));
        }
    }
    w.u32(detail::crc32_update(0, w.bytes.data(), w.bytes.size()));
    return w.bytes;
}

inline void save_model(Network& net, const std::string& path, bool quantize_weights = false) {
    detail::write_file(path, serialize_model(net, quantize_weights));
}

inline Network deserialize_model(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() >= 12, "truncated file: header");
    detail::ByteReader r{bytes.data(), bytes.size()};
    if (std::memcmp(bytes.data(), kModelMagic, 8) != 0)
        throw validation_error("bad model magic (expected WSNET001)");
    r.pos = 8;

    const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    const std::uint32_t actual_crc =
        detail::crc32_update(0, bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc) throw validation_error("model checksum mismatch");
    r.n = bytes.size() - 4;

    const std::uint32_t cfg_len = r.u32("config length");
    const std::string cfg = r.str(cfg_len, "config text");
    Network net = build_network(parse_config(cfg));

    std::vector<ParamRef> blocks = net.param_blocks();
    const std::uint32_t count = r.u32("block count");
    require(count == blocks.size(), "model blocks do not match the embedded config");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("block name length");
        const std::string name = r.str(name_len, "block name");
        require(name == blocks[i].name, "unexpected block '" + name + "'");
        const std::uint8_t flag = r.u8("block flag");
        require(flag <= 1, "unknown block flag");
        const std::uint32_t rank = r.u32("block rank");
        require(rank == blocks[i].shape.size(), "block rank mismatch in '" + name + "'");
        std::int64_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32("block dim");
            require(static_cast<int>(dim) == blocks[i].shape[d],
                    "block shape mismatch in '" + name + "'");
            n *= dim;
        }
        std::vector<double>& dst = *blocks[i].values;
        require(static_cast<std::int64_t>(dst.size()) == n, "block size mismatch");
        if (flag == 0) {
            for (std::int64_t k = 0; k < n; ++k) dst[k] = r.f32("weights");
        } else {
            QuantizedBlock qb;
            qb.codes.resize(n);
            r.need(static_cast<size_t>(n), "codes");
            std::memcpy(qb.codes.data(), r.p + r.pos, static_cast<size_t>(n));
            r.pos += static_cast<size_t>(n);
            for (int k = 0; k < 256; ++k) qb.codebook[k] = r.f32("codebook");
            std::vector<double> vals = dequantize(qb);
            std::copy(vals.begin(), vals.end(), dst.begin());
            blocks[i].layer->from_quantized = true;
        }
    }
    require(r.pos == r.n, "trailing bytes after last block");
    return net;
}

inline Network load_model(const std::string& path) {
    return deserialize_model(detail::read_file(path));
}

inline bool model_is_quantized(const Network& net) {
    for (const Layer& l : net.layers)
        if (l.from_quantized) return true;
    return false;
}

// Theoretical byte layouts of this network's container (see quantize.hpp).
inline std::int64_t model_bytes(Network& net, bool quantized) {
    std::vector<BlockLayout> layout;
    for (ParamRef& b : net.param_blocks())
        layout.push_back(BlockLayout{b.name,
                                     static_cast<std::int64_t>(b.values->size()),
                                     static_cast<int>(b.shape.size()),
                                     quantized && b.quantize_eligible});
    return size_report(layout,
                       static_cast<std::int64_t>(print_config(net.spec).size()));
}

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& path) {
    detail::ByteWriter w;
    w.raw(kDatasetMagic, 8);
    w.u32(static_cast<std::uint32_t>(ds.size()));
    w.u32(static_cast<std::uint32_t>(ds.length));
    w.u32(static_cast<std::uint32_t>(ds.classes));
    for (size_t i = 0; i < ds.size(); ++i) {
        w.u32(static_cast<std::uint32_t>(ds.labels[i]));
        for (float v : ds.clips[i]) w.f32(v);
    }
    detail::write_file(path, w.bytes);
}

inline Dataset load_dataset(const std::string& path) {
    const std::vector<std::uint8_t> bytes = detail::read_file(path);
    require(bytes.size() >= 20, "truncated file: dataset header");
    if (std::memcmp(bytes.data(), kDatasetMagic, 8) != 0)
        throw validation_error("bad dataset magic (expected WSDS0001)");
    detail::ByteReader r{bytes.data(), bytes.size()};
    r.pos = 8;
    Dataset ds;
    const std::uint32_t count = r.u32("clip count");
    ds.length = static_cast<int>(r.u32("clip length"));
    ds.classes = static_cast<int>(r.u32("class count"));
    require(ds.length >= 1, "dataset: clip length must be >= 1");
    require(ds.classes >= 1, "dataset: class count must be >= 1");
    const size_t expect = 20 + static_cast<size_t>(count) * (4 + 4ull * ds.length);
    require(bytes.size() == expect, "dataset: file size does not match header");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t label = r.u32("label");
        require(label < static_cast<std::uint32_t>(ds.classes),
                "dataset: label out of range");
        std::vector<float> clip(ds.length);
        for (int t = 0; t < ds.length; ++t) clip[t] = r.f32("samples");
        ds.clips.push_back(std::move(clip));
        ds.labels.push_back(static_cast<int>(label));
    }
    return ds;
}

} // namespace wsnet
