#include "tvos/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvos {
namespace {

double sample_clamped(const std::vector<double>& plane, int h, int w, int y, int x) {
    y = std::min(std::max(y, 0), h - 1);
    x = std::min(std::max(x, 0), w - 1);
    return plane[static_cast<size_t>(y) * w + x];
}

}  // namespace

FeatureGrid HandcraftedProvider::embed(const ImageU8& frame, int /*frame_index*/, int stride) const {
    if (frame.channels != 3) throw std::invalid_argument("HandcraftedProvider: 8-bit RGB frame required");
    if (stride < 1) throw std::invalid_argument("HandcraftedProvider: stride must be >= 1");

    const ImageU8 img = pad_to_stride(frame, stride);
    const int h = img.h, w = img.w;
    const size_t pixels = static_cast<size_t>(h) * w;

    std::vector<double> r(pixels), g(pixels), b(pixels), gray(pixels);
    for (size_t i = 0; i < pixels; ++i) {
        r[i] = img.data[i * 3] / 255.0;
        g[i] = img.data[i * 3 + 1] / 255.0;
        b[i] = img.data[i * 3 + 2] / 255.0;
        gray[i] = (r[i] + g[i] + b[i]) / 3.0;
    }

    // Sobel on grayscale, replicate-edge sampling.
    std::vector<double> gx(pixels), gy(pixels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double tl = sample_clamped(gray, h, w, y - 1, x - 1);
            const double tc = sample_clamped(gray, h, w, y - 1, x);
            const double tr = sample_clamped(gray, h, w, y - 1, x + 1);
            const double ml = sample_clamped(gray, h, w, y, x - 1);
            const double mr = sample_clamped(gray, h, w, y, x + 1);
            const double bl = sample_clamped(gray, h, w, y + 1, x - 1);
            const double bc = sample_clamped(gray, h, w, y + 1, x);
            const double br = sample_clamped(gray, h, w, y + 1, x + 1);
            gx[static_cast<size_t>(y) * w + x] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[static_cast<size_t>(y) * w + x] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }

    FeatureGrid grid(h / stride, w / stride, kChannels, stride);
    const double inv_area = 1.0 / (static_cast<double>(stride) * stride);
    for (int cy = 0; cy < grid.h; ++cy) {
        for (int cx = 0; cx < grid.w; ++cx) {
            double mr = 0, mg = 0, mb = 0, mgx = 0, mgy = 0, mgray = 0, mgray_sq = 0;
            for (int y = cy * stride; y < (cy + 1) * stride; ++y) {
                for (int x = cx * stride; x < (cx + 1) * stride; ++x) {
                    const size_t i = static_cast<size_t>(y) * w + x;
                    mr += r[i];
                    mg += g[i];
                    mb += b[i];
                    mgx += std::abs(gx[i]);
                    mgy += std::abs(gy[i]);
                    mgray += gray[i];
                    mgray_sq += gray[i] * gray[i];
                }
            }
            mr *= inv_area;
            mg *= inv_area;
            mb *= inv_area;
            mgx *= inv_area;
            mgy *= inv_area;
            mgray *= inv_area;
            mgray_sq *= inv_area;
            const double var = std::max(mgray_sq - mgray * mgray, 0.0);

            float* cell = grid.cell(cy, cx);
            cell[0] = static_cast<float>(mr);
            cell[1] = static_cast<float>(mg);
            cell[2] = static_cast<float>(mb);
            cell[3] = static_cast<float>(mgx);
            cell[4] = static_cast<float>(mgy);
            cell[5] = static_cast<float>(std::sqrt(var));
        }
    }
    grid.normalize_cells();
    return grid;
}

std::vector<FeatureGrid> load_embeddings(const std::string& path, int stride) {
    const Emb1Data raw = read_emb1(path);
    std::vector<FeatureGrid> grids;
    grids.reserve(raw.frames);
    for (uint32_t t = 0; t < raw.frames; ++t) {
        FeatureGrid g(static_cast<int>(raw.h), static_cast<int>(raw.w), static_cast<int>(raw.c), stride);
        const float* src = raw.frame(t);
        std::copy(src, src + raw.frame_size(), g.data.begin());
        g.normalize_cells();
        grids.push_back(std::move(g));
    }
    return grids;
}

FileProvider::FileProvider(std::vector<FeatureGrid> grids) : grids_(std::move(grids)) {
    if (grids_.empty()) throw std::invalid_argument("FileProvider: no grids supplied");
    channels_ = grids_.front().c;
    for (const auto& g : grids_)
        if (g.c != channels_) throw std::invalid_argument("FileProvider: inconsistent channel counts");
}

FileProvider FileProvider::from_file(const std::string& path, int stride) {
    return FileProvider(load_embeddings(path, stride));
}

FeatureGrid FileProvider::embed(const ImageU8& frame, int frame_index, int stride) const {
    if (frame_index < 0 || frame_index >= static_cast<int>(grids_.size()))
        throw std::out_of_range("FileProvider: no embedding for frame " + std::to_string(frame_index));
    const FeatureGrid& g = grids_[frame_index];
    if (!frame.empty()) {
        const int want_h = padded_extent(frame.h, stride) / stride;
        const int want_w = padded_extent(frame.w, stride) / stride;
        if (g.h != want_h || g.w != want_w)
            throw std::invalid_argument("FileProvider: grid " + std::to_string(g.h) + "x" +
                                        std::to_string(g.w) + " does not match frame grid " +
                                        std::to_string(want_h) + "x" + std::to_string(want_w));
    }
    FeatureGrid out = g;
    out.stride = stride;
    return out;
}

ProjectionHead ProjectionHead::identity(int c_in, int c_out) {
    ProjectionHead h(c_in, c_out);
    for (int i = 0; i < std::min(c_in, c_out); ++i) h.weight[static_cast<size_t>(i) * c_out + i] = 1.0;
    return h;
}

ProjectionHead ProjectionHead::random(int c_in, int c_out, uint32_t seed, double scale) {
    ProjectionHead h(c_in, c_out);
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    for (double& v : h.weight) v = dist(rng);
    for (double& v : h.bias) v = dist(rng);
    return h;
}

void ProjectionHead::apply_cell(const float* base, double* projected, double* normalized) const {
    for (int o = 0; o < c_out; ++o) projected[o] = bias[o];
    for (int i = 0; i < c_in; ++i) {
        const double v = base[i];
        const double* wrow = weight.data() + static_cast<size_t>(i) * c_out;
        for (int o = 0; o < c_out; ++o) projected[o] += v * wrow[o];
    }
    double sq = 0.0;
    for (int o = 0; o < c_out; ++o) sq += projected[o] * projected[o];
    if (sq <= 0.0) {
        normalized[0] = 1.0;
        for (int o = 1; o < c_out; ++o) normalized[o] = 0.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (int o = 0; o < c_out; ++o) normalized[o] = projected[o] * inv;
}

FeatureGrid ProjectionHead::apply(const FeatureGrid& base) const {
    if (base.c != c_in)
        throw std::invalid_argument("ProjectionHead: expected " + std::to_string(c_in) +
                                    " input channels, got " + std::to_string(base.c));
    FeatureGrid out(base.h, base.w, c_out, base.stride);
    std::vector<double> proj(c_out), norm(c_out);
    for (int y = 0; y < base.h; ++y) {
        for (int x = 0; x < base.w; ++x) {
            apply_cell(base.cell(y, x), proj.data(), norm.data());
            float* dst = out.cell(y, x);
            for (int o = 0; o < c_out; ++o) dst[o] = static_cast<float>(norm[o]);
        }
    }
    return out;
}

void ProjectionHead::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "TVOSHEAD " << c_in << " " << c_out << "\n";
    out.precision(17);
    for (int i = 0; i < c_in; ++i) {
        for (int o = 0; o < c_out; ++o) out << (o ? " " : "") << weight[static_cast<size_t>(i) * c_out + o];
        out << "\n";
    }
    for (int o = 0; o < c_out; ++o) out << (o ? " " : "") << bias[o];
    out << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

ProjectionHead ProjectionHead::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string magic;
    int c_in = 0, c_out = 0;
    if (!(in >> magic >> c_in >> c_out) || magic != "TVOSHEAD")
        throw std::runtime_error(path + ": not a TVOSHEAD file");
    if (c_in < 1 || c_out < 1) throw std::runtime_error(path + ": bad head dimensions");
    ProjectionHead h(c_in, c_out);
    for (double& v : h.weight)
        if (!(in >> v)) throw std::runtime_error(path + ": truncated weights");
    for (double& v : h.bias)
        if (!(in >> v)) throw std::runtime_error(path + ": truncated biases");
    for (double v : h.weight)
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite weight");
    for (double v : h.bias)
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite bias");
    return h;
}

ProjectedProvider::ProjectedProvider(std::shared_ptr<const EmbeddingProvider> base, ProjectionHead head)
    : base_(std::move(base)), head_(std::move(head)) {
    if (!base_) throw std::invalid_argument("ProjectedProvider: null base provider");
    if (base_->channels() != head_.c_in)
        throw std::invalid_argument("ProjectedProvider: head input dims do not match base provider");
}

FeatureGrid ProjectedProvider::embed(const ImageU8& frame, int frame_index, int stride) const {
    return head_.apply(base_->embed(frame, frame_index, stride));
}

}  // namespace tvos
