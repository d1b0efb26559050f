#include "tvos/emb1.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tvos {
namespace {

static_assert(sizeof(float) == 4, "EMB1 requires 32-bit floats");

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

uint32_t from_le32(const unsigned char b[4]) {
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void to_le32(uint32_t v, unsigned char b[4]) {
    b[0] = static_cast<unsigned char>(v & 0xff);
    b[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    b[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    b[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

}  // namespace

Emb1Data read_emb1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4) throw std::runtime_error(path + ": truncated file (no magic)");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + ": bad magic '" + std::string(magic, 4) + "' (expected EMB1)");

    unsigned char dims[16];
    in.read(reinterpret_cast<char*>(dims), 16);
    if (in.gcount() != 16) throw std::runtime_error(path + ": truncated header");

    Emb1Data data;
    data.frames = from_le32(dims);
    data.h = from_le32(dims + 4);
    data.w = from_le32(dims + 8);
    data.c = from_le32(dims + 12);

    const uint64_t count = static_cast<uint64_t>(data.frames) * data.h * data.w * data.c;
    if (count == 0) throw std::runtime_error(path + ": zero-sized payload dims");
    data.values.resize(count);

    std::vector<unsigned char> raw(count * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        throw std::runtime_error(path + ": truncated payload (expected " + std::to_string(raw.size()) +
                                 " value bytes)");

    for (size_t i = 0; i < count; ++i) {
        const uint32_t bits = from_le32(raw.data() + i * 4);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v))
            throw std::runtime_error(path + ": non-finite value at flat index " + std::to_string(i));
        data.values[i] = v;
    }
    return data;
}

void write_emb1(const std::string& path, const Emb1Data& data) {
    const uint64_t count = static_cast<uint64_t>(data.frames) * data.h * data.w * data.c;
    if (count != data.values.size())
        throw std::invalid_argument(path + ": dims inconsistent with value count");
    for (float v : data.values)
        if (!std::isfinite(v)) throw std::invalid_argument(path + ": refusing to write non-finite value");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(kMagic, 4);
    unsigned char b[4];
    for (uint32_t dim : {data.frames, data.h, data.w, data.c}) {
        to_le32(dim, b);
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    for (float v : data.values) {
        to_le32(std::bit_cast<uint32_t>(v), b);
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace tvos
