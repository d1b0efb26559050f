#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvos {

/// Raw contents of an EMB1 embedding container.
/// Layout: magic "EMB1", four u32 little-endian dims (T, H, W, C), then
/// T*H*W*C float32 little-endian values in (t, y, x, c) order.
struct Emb1Data {
    uint32_t frames = 0;   // T
    uint32_t h = 0;        // grid rows
    uint32_t w = 0;        // grid cols
    uint32_t c = 0;        // channels
    std::vector<float> values;

    size_t frame_size() const { return static_cast<size_t>(h) * w * c; }
    const float* frame(size_t t) const { return values.data() + t * frame_size(); }
};

Emb1Data read_emb1(const std::string& path);
void write_emb1(const std::string& path, const Emb1Data& data);

}  // namespace tvos
