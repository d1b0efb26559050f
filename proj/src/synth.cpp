#include "tvos/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tvos/netpbm.hpp"

namespace tvos {
namespace {

constexpr double kNoiseSigma = 2.0;  // 8-bit levels, i.e. 2/255 of full scale

struct Color {
    double r, g, b;
};

// Palette chosen so the handcrafted color channels separate objects while
// mixed boundary cells still grade smoothly between the classes.
constexpr Color kBackgroundA{85, 20, 188};   // deep blue
constexpr Color kBackgroundB{85, 178, 84};  // sea green
const Color kObjectColors[] = {{205, 12, 12}, {12, 195, 12}, {225, 190, 24}, {200, 30, 200}};

// The backdrop hue drifts across the canvas; distant background regions then
// stop pooling into one appearance cluster.
Color background_at(double fx, double fy) {
    const double f = 0.5 * (fx + fy);
    return {kBackgroundA.r + (kBackgroundB.r - kBackgroundA.r) * f,
            kBackgroundA.g + (kBackgroundB.g - kBackgroundA.g) * f,
            kBackgroundA.b + (kBackgroundB.b - kBackgroundA.b) * f};
}

struct ObjectState {
    int id = 0;
    bool ellipse = false;
    // Rectangle extent or ellipse bounding box per frame (x, y, w, h).
    std::vector<std::array<int, 4>> boxes;
    Color color{};
    int vx = 0, vy = 0;  // nominal per-frame motion (rect presets)
};

bool inside_object(const ObjectState& obj, int t, int x, int y) {
    const auto& b = obj.boxes[t];
    if (!obj.ellipse)
        return x >= b[0] && x < b[0] + b[2] && y >= b[1] && y < b[1] + b[3];
    const double rx = b[2] / 2.0, ry = b[3] / 2.0;
    const double cx = b[0] + rx, cy = b[1] + ry;
    const double nx = (x + 0.5 - cx) / rx, ny = (y + 0.5 - cy) / ry;
    return nx * nx + ny * ny <= 1.0;
}

uint8_t clamp_u8(double v) {
    return static_cast<uint8_t>(std::min(std::max(v, 0.0), 255.0));
}

// Flat color plus a mild ramp. Object ramps ride in object-local coordinates
// so a translating object keeps identical cell statistics.
Color shade(const Color& base, double fx, double fy) {
    const double ramp = 4.0 * (fx - 0.5) + 2.5 * (fy - 0.5);
    return {base.r + ramp, base.g + ramp, base.b + ramp};
}

int clamp_int(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

ScenePreset::Kind ScenePreset::parse_kind(const std::string& name) {
    if (name == "translation") return Kind::translation;
    if (name == "two_object_crossing") return Kind::two_object_crossing;
    if (name == "occlusion_reappear") return Kind::occlusion_reappear;
    if (name == "deform") return Kind::deform;
    throw std::invalid_argument("unknown scene preset '" + name + "'");
}

std::string ScenePreset::kind_name(Kind kind) {
    switch (kind) {
        case Kind::translation: return "translation";
        case Kind::two_object_crossing: return "two_object_crossing";
        case Kind::occlusion_reappear: return "occlusion_reappear";
        case Kind::deform: return "deform";
    }
    return "?";
}

SynthResult generate(const ScenePreset& preset) {
    const int W = preset.width, H = preset.height, T = preset.frames;
    if (W < 32 || H < 32) throw std::invalid_argument("synth: dims must be at least 32x32");
    if (T < 2) throw std::invalid_argument("synth: need at least 2 frames");

    std::mt19937 rng(preset.seed);
    auto jitter = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::vector<ObjectState> objects;
    nlohmann::json manifest;
    manifest["preset"] = ScenePreset::kind_name(preset.kind);
    manifest["seed"] = preset.seed;
    manifest["frames"] = T;
    manifest["width"] = W;
    manifest["height"] = H;
    manifest["noise_sigma"] = kNoiseSigma / 255.0;

    auto make_rect_track = [&](int id, int x0, int y0, int sw, int sh, int vx, int vy,
                               bool clamp_walls) {
        ObjectState obj;
        obj.id = id;
        obj.color = kObjectColors[(id - 1) % 4];
        obj.vx = vx;
        obj.vy = vy;
        obj.boxes.resize(T);
        for (int t = 0; t < T; ++t) {
            int x = x0 + vx * t, y = y0 + vy * t;
            if (clamp_walls) {
                x = clamp_int(x, 1, W - sw - 1);
                y = clamp_int(y, 1, H - sh - 1);
            }
            obj.boxes[t] = {x, y, sw, sh};
        }
        return obj;
    };

    switch (preset.kind) {
        case ScenePreset::Kind::translation: {
            // A band spanning the static axis, sliding one pixel per frame
            // along the other. The trajectory stays strictly inside, so pixel
            // counts are conserved and the centroid motion is exact.
            const int travel = T - 1;
            const bool horizontal = jitter(0, 1) == 1;
            const int span = horizontal ? W : H;
            const int thickness = std::max(16, std::min(span - travel, span * 3 / 8));
            if (span - thickness - travel < 0)
                throw std::invalid_argument("synth: translation does not fit these dims/frames");
            const int v = jitter(0, 1) ? 1 : -1;
            const int lo = v < 0 ? travel : 0;
            const int hi = v > 0 ? span - thickness - travel : span - thickness;
            const int start = jitter(lo, std::max(lo, hi));
            if (horizontal)
                objects.push_back(make_rect_track(1, start, 0, thickness, H, v, 0, false));
            else
                objects.push_back(make_rect_track(1, 0, start, W, thickness, 0, v, false));
            break;
        }
        case ScenePreset::Kind::two_object_crossing: {
            // Two vertical bands sweep toward each other; object 2 passes in
            // front of object 1 mid-sequence.
            const int s = std::max(16, std::min(W / 3, W - T + 1));
            if (W - s - (T - 1) < 0)
                throw std::invalid_argument("synth: two_object_crossing does not fit these dims/frames");
            const int band_h = std::max(16, (H - 16) / 8 * 8);
            const int y0 = (H - band_h) / 2 / 8 * 8;
            objects.push_back(make_rect_track(1, 0, y0, s, band_h, 1, 0, false));
            objects.push_back(make_rect_track(2, W - s, y0, s, band_h, -1, 0, false));
            break;
        }
        case ScenePreset::Kind::occlusion_reappear: {
            // Object 1 slides behind a static full-height blocker, stays fully
            // hidden for >= 12 frames, and re-emerges displaced with >= 15
            // frames left for re-detection.
            const int s1 = std::max(16, H * 3 / 8);
            const int h1 = std::max(16, (H - 16) / 8 * 8);
            const int y1 = 8 * jitter(0, std::max(0, (H - h1) / 8));
            const int extra = 4 * jitter(0, 1);  // seeded blocker slack
            int vx = 2;
            auto fits = [&](int v) {
                const int wb = s1 + 12 * v + extra;     // full cover for >= 13 frames
                const int xb = (W - wb) / 2;
                if (xb <= 4) return false;              // blocker must sit ahead of the start
                const int t_reveal = (xb + wb - s1) / v + 1;
                if (T - t_reveal < 15) return false;    // tail after the reveal
                return v * (T - 1) + s1 <= W;           // trajectory stays inside
            };
            if (!fits(vx)) vx = 1;
            if (!fits(vx))
                throw std::invalid_argument(
                    "synth: occlusion_reappear does not fit these dims/frames (try a wider "
                    "canvas or more frames, e.g. 112x64 / 45)");
            const int wb = s1 + 12 * vx + extra;
            const int xb = (W - wb) / 2;
            const bool mirror = jitter(0, 1) == 1;  // sweep direction
            if (mirror)
                objects.push_back(make_rect_track(1, W - s1, y1, s1, h1, -vx, 0, false));
            else
                objects.push_back(make_rect_track(1, 0, y1, s1, h1, vx, 0, false));
            objects.push_back(make_rect_track(2, xb, 0, wb, H, 0, 0, false));
            break;
        }
        case ScenePreset::Kind::deform: {
            const int r0 = std::max(10, std::min(W, H) / 4);
            const int cx = W / 2 + jitter(-3, 3), cy = H / 2 + jitter(-3, 3);
            ObjectState obj;
            obj.id = 1;
            obj.ellipse = true;
            obj.color = kObjectColors[0];
            obj.boxes.resize(T);
            for (int t = 0; t < T; ++t) {
                const double phase = 2.0 * M_PI * t / std::max(T / 2, 2);
                const int rx = std::max(4, static_cast<int>(std::lround(r0 * (1.0 + 0.2 * std::sin(phase)))));
                const int ry = std::max(4, static_cast<int>(std::lround(r0 * (1.0 - 0.2 * std::sin(phase)))));
                obj.boxes[t] = {clamp_int(cx - rx, 0, W - 1), clamp_int(cy - ry, 0, H - 1),
                                std::min(2 * rx, W - 1), std::min(2 * ry, H - 1)};
            }
            objects.push_back(obj);
            break;
        }
    }

    // Render: background, then objects in id order (higher ids in front).
    SynthResult result;
    result.frames.reserve(T);
    result.clean_frames.reserve(T);
    result.masks.reserve(T);
    for (int t = 0; t < T; ++t) {
        ImageU8 clean(H, W, 3);
        MaskU8 mask(H, W, 0);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                // Multi-object scenes keep a flat backdrop so every object hue
                // stays separable; single-object scenes get the hue drift.
                Color c = objects.size() > 1
                              ? kBackgroundA
                              : background_at(static_cast<double>(x) / W, static_cast<double>(y) / H);
                c = shade(c, static_cast<double>(x) / W, static_cast<double>(y) / H);
                for (const ObjectState& obj : objects) {
                    if (!inside_object(obj, t, x, y)) continue;
                    const auto& b = obj.boxes[t];
                    c = shade(obj.color, (x - b[0] + 0.5) / b[2], (y - b[1] + 0.5) / b[3]);
                    mask.at(y, x) = static_cast<uint8_t>(obj.id);
                }
                clean.at(y, x, 0) = clamp_u8(c.r);
                clean.at(y, x, 1) = clamp_u8(c.g);
                clean.at(y, x, 2) = clamp_u8(c.b);
            }
        }
        result.clean_frames.push_back(clean);
        result.masks.push_back(std::move(mask));
    }

    // Additive seeded sensor noise on top of the clean renders.
    std::normal_distribution<double> noise(0.0, kNoiseSigma);
    for (int t = 0; t < T; ++t) {
        ImageU8 noisy = result.clean_frames[t];
        for (uint8_t& v : noisy.data) v = clamp_u8(v + noise(rng));
        result.frames.push_back(std::move(noisy));
    }

    nlohmann::json objs = nlohmann::json::array();
    for (const ObjectState& obj : objects) {
        nlohmann::json o;
        o["id"] = obj.id;
        o["shape"] = obj.ellipse ? "ellipse" : "rect";
        o["start"] = {obj.boxes[0][0], obj.boxes[0][1]};
        o["size"] = {obj.boxes[0][2], obj.boxes[0][3]};
        o["velocity"] = {obj.vx, obj.vy};
        o["color"] = {obj.color.r, obj.color.g, obj.color.b};
        o["clipped"] = false;
        objs.push_back(o);
    }
    manifest["objects"] = objs;

    if (preset.kind == ScenePreset::Kind::occlusion_reappear) {
        // Span measured from the rendered masks, not from the layout math.
        int first_hidden = -1, last_hidden = -1;
        for (int t = 0; t < T; ++t) {
            const bool visible = std::any_of(result.masks[t].data.begin(), result.masks[t].data.end(),
                                             [](uint8_t v) { return v == 1; });
            if (!visible) {
                if (first_hidden < 0) first_hidden = t;
                last_hidden = t;
            } else if (first_hidden >= 0 && last_hidden >= 0 && t > last_hidden + 1) {
                break;
            }
        }
        if (first_hidden < 0 || last_hidden - first_hidden + 1 < 10)
            throw std::logic_error("synth: occlusion span contract violated");
        manifest["occlusion"] = {{"start", first_hidden}, {"end", last_hidden}};
    }

    result.manifest = manifest.dump(2);
    return result;
}

void save_synth(const SynthResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "gt");
    char name[32];
    for (size_t t = 0; t < result.frames.size(); ++t) {
        std::snprintf(name, sizeof(name), "%05zu.ppm", t);
        write_ppm((fs::path(dir) / "frames" / name).string(), result.frames[t]);
        std::snprintf(name, sizeof(name), "%05zu.pgm", t);
        write_pgm((fs::path(dir) / "gt" / name).string(), result.masks[t]);
    }
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error(dir + ": cannot write manifest.json");
    mf << result.manifest << "\n";
}

}  // namespace tvos
