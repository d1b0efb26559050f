#include "tvos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tvos/netpbm.hpp"

namespace tvos {
namespace {

void check_dims(const MaskU8& a, const MaskU8& b, const char* who) {
    if (a.h != b.h || a.w != b.w)
        throw std::invalid_argument(std::string(who) + ": mask dimension mismatch");
}

}  // namespace

double region_j(const MaskU8& pred, const MaskU8& gt, int object_id) {
    check_dims(pred, gt, "region_j");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] == object_id;
        const bool g = gt.data[i] == object_id;
        inter += (p && g);
        uni += (p || g);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::pair<int, int>> boundary_pixels(const MaskU8& mask, int object_id) {
    std::vector<std::pair<int, int>> out;
    auto inside = [&](int y, int x) {
        return y >= 0 && y < mask.h && x >= 0 && x < mask.w && mask.at(y, x) == object_id;
    };
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            if (mask.at(y, x) != object_id) continue;
            if (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1))
                out.emplace_back(y, x);
        }
    }
    return out;
}

double boundary_f(const MaskU8& pred, const MaskU8& gt, int object_id, double tolerance_frac) {
    check_dims(pred, gt, "boundary_f");
    const auto pb = boundary_pixels(pred, object_id);
    const auto gb = boundary_pixels(gt, object_id);
    if (pb.empty() && gb.empty()) return 1.0;
    if (pb.empty() || gb.empty()) return 0.0;

    const double diag = std::sqrt(static_cast<double>(pred.h) * pred.h +
                                  static_cast<double>(pred.w) * pred.w);
    const int radius = static_cast<int>(std::ceil(tolerance_frac * diag));
    const long radius_sq = static_cast<long>(radius) * radius;

    // Dilate each boundary by a Euclidean disk, then count hits on the other.
    auto dilate = [&](const std::vector<std::pair<int, int>>& pts) {
        std::vector<uint8_t> hit(static_cast<size_t>(pred.h) * pred.w, 0);
        for (const auto& [py, px] : pts) {
            for (int dy = -radius; dy <= radius; ++dy) {
                const int y = py + dy;
                if (y < 0 || y >= pred.h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int x = px + dx;
                    if (x < 0 || x >= pred.w) continue;
                    if (static_cast<long>(dy) * dy + static_cast<long>(dx) * dx > radius_sq) continue;
                    hit[static_cast<size_t>(y) * pred.w + x] = 1;
                }
            }
        }
        return hit;
    };
    const std::vector<uint8_t> near_gt = dilate(gb);
    const std::vector<uint8_t> near_pred = dilate(pb);

    size_t matched_pred = 0;
    for (const auto& [y, x] : pb) matched_pred += near_gt[static_cast<size_t>(y) * pred.w + x];
    size_t matched_gt = 0;
    for (const auto& [y, x] : gb) matched_gt += near_pred[static_cast<size_t>(y) * pred.w + x];

    const double precision = static_cast<double>(matched_pred) / static_cast<double>(pb.size());
    const double recall = static_cast<double>(matched_gt) / static_cast<double>(gb.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

EvalReport evaluate_masks(const std::vector<MaskU8>& pred, const std::vector<MaskU8>& gt,
                          bool skip_first) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("evaluate: prediction/ground-truth frame count mismatch (" +
                                    std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) + ")");
    if (gt.empty()) throw std::invalid_argument("evaluate: no frames");

    std::set<int> gt_ids, pred_ids;
    for (size_t t = 0; t < gt.size(); ++t) {
        check_dims(pred[t], gt[t], "evaluate");
        for (uint8_t v : gt[t].data)
            if (v > 0) gt_ids.insert(v);
        for (uint8_t v : pred[t].data)
            if (v > 0) pred_ids.insert(v);
    }
    for (int id : pred_ids)
        if (!gt_ids.count(id))
            throw std::invalid_argument("evaluate: prediction contains object id " +
                                        std::to_string(id) + " absent from ground truth");

    EvalReport report;
    const size_t start = skip_first ? 1 : 0;
    if (start >= gt.size()) throw std::invalid_argument("evaluate: no frames left to evaluate");

    std::map<int, double> j_sum, f_sum;
    for (size_t t = start; t < gt.size(); ++t) {
        report.frame_indices.push_back(static_cast<int>(t));
        std::map<int, double> frame_j;
        for (int id : gt_ids) {
            const double j = region_j(pred[t], gt[t], id);
            j_sum[id] += j;
            f_sum[id] += boundary_f(pred[t], gt[t], id);
            frame_j[id] = j;
        }
        report.per_frame_j.push_back(std::move(frame_j));
    }

    const double frames = static_cast<double>(gt.size() - start);
    double j_total = 0.0, f_total = 0.0;
    for (int id : gt_ids) {
        ObjectScore score{j_sum[id] / frames, f_sum[id] / frames};
        report.per_object[id] = score;
        j_total += score.j;
        f_total += score.f;
    }
    if (!gt_ids.empty()) {
        report.j_mean = j_total / static_cast<double>(gt_ids.size());
        report.f_mean = f_total / static_cast<double>(gt_ids.size());
    } else {
        // No annotated objects anywhere: score the (trivially correct) background.
        report.j_mean = 1.0;
        report.f_mean = 1.0;
    }
    report.g_mean = 0.5 * (report.j_mean + report.f_mean);
    return report;
}

namespace {

std::vector<MaskU8> read_mask_dir(const std::string& dir, std::vector<std::string>& names) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
    names.clear();
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".pgm") names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error(dir + ": no .pgm masks found");
    std::vector<MaskU8> masks;
    masks.reserve(names.size());
    for (const std::string& n : names) masks.push_back(read_pgm((fs::path(dir) / n).string()));
    return masks;
}

}  // namespace

EvalReport evaluate_sequence(const std::string& pred_dir, const std::string& gt_dir,
                             bool skip_first) {
    std::vector<std::string> pred_names, gt_names;
    const std::vector<MaskU8> pred = read_mask_dir(pred_dir, pred_names);
    const std::vector<MaskU8> gt = read_mask_dir(gt_dir, gt_names);
    if (pred_names != gt_names) {
        for (const std::string& n : gt_names)
            if (std::find(pred_names.begin(), pred_names.end(), n) == pred_names.end())
                throw std::runtime_error(pred_dir + ": missing predicted mask " + n);
        throw std::runtime_error(pred_dir + ": mask file names do not match " + gt_dir);
    }
    return evaluate_masks(pred, gt, skip_first);
}

std::string per_frame_series(const EvalReport& report) {
    std::ostringstream out;
    out << "frame";
    for (const auto& [id, score] : report.per_object) out << " " << id;
    out << "\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (size_t row = 0; row < report.per_frame_j.size(); ++row) {
        out << report.frame_indices[row];
        for (const auto& [id, score] : report.per_object) out << " " << report.per_frame_j[row].at(id);
        out << "\n";
    }
    return out.str();
}

std::string report_json(const EvalReport& report) {
    nlohmann::json doc;
    doc["J_mean"] = report.j_mean;
    doc["F_mean"] = report.f_mean;
    doc["G_mean"] = report.g_mean;
    nlohmann::json per_object = nlohmann::json::object();
    for (const auto& [id, score] : report.per_object)
        per_object[std::to_string(id)] = {{"J", score.j}, {"F", score.f}};
    doc["per_object"] = per_object;
    nlohmann::json per_frame = nlohmann::json::array();
    for (size_t row = 0; row < report.per_frame_j.size(); ++row) {
        nlohmann::json entry;
        entry["frame"] = report.frame_indices[row];
        nlohmann::json iou = nlohmann::json::object();
        for (const auto& [id, j] : report.per_frame_j[row]) iou[std::to_string(id)] = j;
        entry["J"] = iou;
        per_frame.push_back(entry);
    }
    doc["per_frame"] = per_frame;
    return doc.dump(2);
}

}  // namespace tvos
