#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvos/image.hpp"

namespace tvos {

/// Deterministic synthetic scene description.
struct ScenePreset {
    enum class Kind { translation, two_object_crossing, occlusion_reappear, deform };

    Kind kind = Kind::translation;
    int frames = 40;
    int width = 64;
    int height = 64;
    uint32_t seed = 0;

    static ScenePreset::Kind parse_kind(const std::string& name);
    static std::string kind_name(Kind kind);
};

/// Fully annotated synthetic sequence. `clean_frames` are the renders before
/// the additive noise; `manifest` is a JSON document recording geometry,
/// motion vectors, occlusion spans and the seed.
struct SynthResult {
    std::vector<ImageU8> frames;
    std::vector<ImageU8> clean_frames;
    std::vector<MaskU8> masks;
    std::string manifest;  // JSON text
};

SynthResult generate(const ScenePreset& preset);

/// Writes frames/%05d.ppm, gt/%05d.pgm and manifest.json under `dir`.
void save_synth(const SynthResult& result, const std::string& dir);

}  // namespace tvos
