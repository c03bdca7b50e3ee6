#pragma once

#include "wsnet/tensor.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

// 8-bit post-training weight quantization: per-block uniform min-max binning
// into 256 codebook values, one byte per weight. Per-block codebooks because
// dynamic ranges differ strongly across layers; the codebook representation
// also admits clustered codebooks later without a format change.

namespace wsnet {

struct QuantizedBlock {
    std::vector<std::uint8_t> codes;
    std::array<double, 256> codebook{};
    std::vector<int> shape;
};

inline QuantizedBlock quantize(const std::vector<double>& values,
                               const std::vector<int>& shape = {}) {
    QuantizedBlock q;
    q.shape = shape;
    q.codes.resize(values.size());
    double lo = 0.0, hi = 0.0;
    if (!values.empty()) {
        lo = hi = values[0];
        for (double v : values) {
            require(std::isfinite(v), "quantize: non-finite weight");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi == lo) {
        for (auto& c : q.codebook) c = lo;
        // all codes stay 0
        return q;
    }
    const double step = (hi - lo) / 255.0;
    for (int k = 0; k < 256; ++k) q.codebook[k] = lo + k * step;
    for (size_t i = 0; i < values.size(); ++i) {
        long code = std::lround((values[i] - lo) / step);
        if (code < 0) code = 0;
        if (code > 255) code = 255;
        q.codes[i] = static_cast<std::uint8_t>(code);
    }
    return q;
}

inline std::vector<double> dequantize(const QuantizedBlock& q) {
    std::vector<double> out(q.codes.size());
    for (size_t i = 0; i < q.codes.size(); ++i) out[i] = q.codebook[q.codes[i]];
    return out;
}

// Byte accounting matching the model container: per block a u32 name length,
// the name, a flag byte, u32 rank + u32 dims, then the payload (4 bytes per
// weight as float32, or 1 byte per weight plus a 256-entry float32 codebook).
struct BlockLayout {
    std::string name;
    std::int64_t count = 0;
    int rank = 1;
    bool quantized = false;
};

inline std::int64_t block_bytes(const BlockLayout& b) {
    const std::int64_t header = 4 + static_cast<std::int64_t>(b.name.size()) + 1 + 4 +
                                4ll * b.rank;
    return header + (b.quantized ? b.count + 1024 : 4 * b.count);
}

// Container overhead: magic + embedded config + block count + trailing crc.
inline std::int64_t container_bytes(std::int64_t config_len) {
    return 8 + 4 + config_len + 4 + 4;
}

inline std::int64_t size_report(const std::vector<BlockLayout>& blocks,
                                std::int64_t config_len) {
    std::int64_t total = container_bytes(config_len);
    for (const BlockLayout& b : blocks) total += block_bytes(b);
    return total;
}

} // namespace wsnet
