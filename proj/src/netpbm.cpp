#include "tvos/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace tvos {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Reads one header token, skipping whitespace and `#` comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_dim(std::istream& in, const std::string& path, const char* name) {
    const std::string tok = next_token(in);
    if (tok.empty()) fail(path, std::string("truncated header while reading ") + name);
    size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        fail(path, std::string("malformed ") + name + " '" + tok + "'");
    }
    if (pos != tok.size() || value <= 0) fail(path, std::string("malformed ") + name + " '" + tok + "'");
    return value;
}

// Common header handling for P5/P6. Leaves the stream right after the single
// whitespace byte that terminates the maxval token.
void read_header(std::istream& in, const std::string& path, const char* magic_want,
                 int& h, int& w) {
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (in.gcount() != 2) fail(path, "truncated file (no magic)");
    if (magic != magic_want) {
        if (magic == "P2" || magic == "P3")
            fail(path, "unsupported ASCII netpbm variant '" + magic + "' (binary " + magic_want + " required)");
        fail(path, "bad magic '" + magic + "' (expected " + magic_want + ")");
    }
    w = parse_dim(in, path, "width");
    h = parse_dim(in, path, "height");
    const int maxval = parse_dim(in, path, "maxval");
    if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval) + " (must be 255)");
}

void read_payload(std::istream& in, const std::string& path, std::vector<uint8_t>& data) {
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (static_cast<size_t>(in.gcount()) != data.size()) fail(path, "truncated pixel payload");
}

}  // namespace

ImageU8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    int h = 0, w = 0;
    read_header(in, path, "P6", h, w);
    ImageU8 img(h, w, 3);
    read_payload(in, path, img.data);
    return img;
}

void write_ppm(const std::string& path, const ImageU8& img) {
    if (img.channels != 3) throw std::invalid_argument(path + ": write_ppm requires a 3-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!out) fail(path, "write failed");
}

MaskU8 read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    int h = 0, w = 0;
    read_header(in, path, "P5", h, w);
    MaskU8 mask(h, w);
    read_payload(in, path, mask.data);
    return mask;
}

void write_pgm(const std::string& path, const MaskU8& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << mask.w << " " << mask.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.data.data()), static_cast<std::streamsize>(mask.data.size()));
    if (!out) fail(path, "write failed");
}

}  // namespace tvos
