#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvos/image.hpp"

namespace tvos {

struct ObjectScore {
    double j = 0.0;
    double f = 0.0;
};

struct EvalReport {
    std::map<int, ObjectScore> per_object;           // object id -> mean J, mean F
    std::vector<int> frame_indices;                  // evaluated frames, in order
    std::vector<std::map<int, double>> per_frame_j;  // per evaluated frame: id -> IoU
    double j_mean = 0.0;
    double f_mean = 0.0;
    double g_mean = 0.0;
};

/// Region similarity: IoU of the object's binary masks. Both empty -> 1,
/// exactly one empty -> 0.
double region_j(const MaskU8& pred, const MaskU8& gt, int object_id);

/// Boundary measure: precision/recall of 4-connected boundary pixels matched
/// within ceil(tolerance_frac * image diagonal) Euclidean pixels, combined as
/// 2PR/(P+R). Both boundaries empty -> 1, no match possible -> 0.
double boundary_f(const MaskU8& pred, const MaskU8& gt, int object_id,
                  double tolerance_frac = 0.008);

/// 4-connected boundary of the object's binary mask (outside counts as background).
std::vector<std::pair<int, int>> boundary_pixels(const MaskU8& mask, int object_id);

/// Per-object J/F averaged over evaluated frames, plus the per-frame IoU
/// series. Frame 0 is excluded by default (it is the given annotation).
/// Object ids come from the ground truth; predictions must not introduce ids
/// outside that set.
EvalReport evaluate_masks(const std::vector<MaskU8>& pred, const std::vector<MaskU8>& gt,
                          bool skip_first = true);

/// Directory variant: reads identically named .pgm masks from both dirs.
EvalReport evaluate_sequence(const std::string& pred_dir, const std::string& gt_dir,
                             bool skip_first = true);

/// Plain-text IoU-vs-time table: one row per evaluated frame, one column per object.
std::string per_frame_series(const EvalReport& report);

/// JSON document with keys J_mean, F_mean, G_mean, per_object, per_frame.
std::string report_json(const EvalReport& report);

}  // namespace tvos
