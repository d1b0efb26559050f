#include "tvos/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvos {
namespace {

// Endpoints-inclusive even spacing over [lo, hi], round half up.
std::vector<int> spaced_offsets(int lo, int hi, int count) {
    std::vector<int> out;
    out.reserve(count);
    if (count == 1 || lo >= hi) {
        out.push_back(hi);
        return out;
    }
    const double step = static_cast<double>(hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i)
        out.push_back(static_cast<int>(std::floor(lo + i * step + 0.5)));
    return out;
}

void append_offsets(std::vector<std::pair<int, SigmaClass>>& entries, int target,
                    const std::vector<int>& offsets, SigmaClass cls) {
    for (int off : offsets) entries.emplace_back(std::max(target - off, 0), cls);
}

}  // namespace

SamplingStrategy SamplingStrategy::previous() {
    SamplingStrategy s;
    s.kind = Kind::previous;
    s.count = 1;
    return s;
}

SamplingStrategy SamplingStrategy::consecutive(int n) {
    SamplingStrategy s;
    s.kind = Kind::consecutive;
    s.count = n;
    return s;
}

SamplingStrategy SamplingStrategy::uniform(int count, int window) {
    SamplingStrategy s;
    s.kind = Kind::uniform;
    s.count = count;
    s.window = window;
    return s;
}

SamplingStrategy SamplingStrategy::sparse_dense(int dense, int sparse, int window) {
    SamplingStrategy s;
    s.kind = Kind::sparse_dense;
    s.dense_count = dense;
    s.sparse_count = sparse;
    s.window = window;
    return s;
}

void SamplingStrategy::validate() const {
    switch (kind) {
        case Kind::previous:
            break;
        case Kind::consecutive:
            if (count < 1) throw std::invalid_argument("SamplingStrategy: consecutive count must be >= 1");
            break;
        case Kind::uniform:
            if (count < 1) throw std::invalid_argument("SamplingStrategy: uniform count must be >= 1");
            if (window < count) throw std::invalid_argument("SamplingStrategy: uniform window too small");
            break;
        case Kind::sparse_dense:
            if (dense_count < 1 || sparse_count < 1)
                throw std::invalid_argument("SamplingStrategy: sparse-dense counts must be >= 1");
            if (window < dense_count + sparse_count)
                throw std::invalid_argument("SamplingStrategy: window must cover dense + sparse counts");
            break;
    }
}

ReferenceSet select_references(int target, const SamplingStrategy& s) {
    s.validate();
    if (target < 1)
        throw std::invalid_argument("select_references: target frame must be >= 1 (frame 0 is the annotation)");

    std::vector<std::pair<int, SigmaClass>> entries;
    switch (s.kind) {
        case SamplingStrategy::Kind::previous:
            entries.emplace_back(target - 1, SigmaClass::local);
            break;
        case SamplingStrategy::Kind::consecutive: {
            std::vector<int> offs(s.count);
            for (int i = 0; i < s.count; ++i) offs[i] = i + 1;
            append_offsets(entries, target, offs, SigmaClass::local);
            break;
        }
        case SamplingStrategy::Kind::uniform:
            append_offsets(entries, target, spaced_offsets(std::min(5, s.window), s.window, s.count),
                           SigmaClass::distant);
            break;
        case SamplingStrategy::Kind::sparse_dense: {
            std::vector<int> dense(s.dense_count);
            for (int i = 0; i < s.dense_count; ++i) dense[i] = i + 1;
            append_offsets(entries, target, dense, SigmaClass::local);
            append_offsets(entries, target,
                           spaced_offsets(s.dense_count + 1, s.window, s.sparse_count),
                           SigmaClass::distant);
            break;
        }
    }

    if (s.include_first_frame) entries.emplace_back(0, SigmaClass::distant);

    // Deduplicate, first occurrence wins (dense tags beat sparse tags on clips).
    ReferenceSet refs;
    for (const auto& [idx, cls] : entries) {
        const bool seen = std::any_of(refs.begin(), refs.end(),
                                      [idx](const ReferenceSpec& r) { return r.frame_index == idx; });
        if (!seen) refs.push_back({idx, s.motion_prior ? cls : SigmaClass::local});
    }
    std::sort(refs.begin(), refs.end(),
              [](const ReferenceSpec& a, const ReferenceSpec& b) { return a.frame_index > b.frame_index; });
    return refs;
}

std::vector<AblationEntry> ablation_grid() {
    std::vector<AblationEntry> grid;
    grid.push_back({"1 frame", SamplingStrategy::previous()});
    grid.push_back({"3 frames", SamplingStrategy::consecutive(3)});
    grid.push_back({"9 frames", SamplingStrategy::consecutive(9)});
    grid.push_back({"uniform sample", SamplingStrategy::uniform(9, 40)});
    grid.push_back({"sparse sample", SamplingStrategy::sparse_dense()});
    SamplingStrategy motion = SamplingStrategy::sparse_dense();
    motion.motion_prior = true;
    grid.push_back({"sparse + motion", motion});
    return grid;
}

namespace {

std::vector<int> split_ints(const std::string& text, const std::string& whole) {
    std::vector<int> vals;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find(':', pos);
        if (next == std::string::npos) next = text.size();
        const std::string part = text.substr(pos, next - pos);
        try {
            size_t used = 0;
            vals.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw std::invalid_argument("strategy '" + whole + "': bad integer field '" + part + "'");
        }
        pos = next + 1;
    }
    return vals;
}

}  // namespace

SamplingStrategy parse_strategy(const std::string& text) {
    std::string base = text;
    bool motion = false, first = false;
    size_t plus;
    while ((plus = base.rfind('+')) != std::string::npos) {
        const std::string flag = base.substr(plus + 1);
        if (flag == "motion")
            motion = true;
        else if (flag == "first")
            first = true;
        else
            throw std::invalid_argument("strategy '" + text + "': unknown suffix '+" + flag + "'");
        base.resize(plus);
    }

    SamplingStrategy s;
    if (base == "prev1") {
        s = SamplingStrategy::previous();
    } else if (base.rfind("consec:", 0) == 0) {
        const auto vals = split_ints(base.substr(7), text);
        if (vals.size() != 1) throw std::invalid_argument("strategy '" + text + "': consec takes one field");
        s = SamplingStrategy::consecutive(vals[0]);
    } else if (base.rfind("uniform:", 0) == 0) {
        const auto vals = split_ints(base.substr(8), text);
        if (vals.size() != 2) throw std::invalid_argument("strategy '" + text + "': uniform takes N:W");
        s = SamplingStrategy::uniform(vals[0], vals[1]);
    } else if (base == "sparse-dense") {
        s = SamplingStrategy::sparse_dense();
    } else if (base.rfind("sparse-dense:", 0) == 0) {
        const auto vals = split_ints(base.substr(13), text);
        if (vals.size() != 3) throw std::invalid_argument("strategy '" + text + "': sparse-dense takes D:S:W");
        s = SamplingStrategy::sparse_dense(vals[0], vals[1], vals[2]);
    } else {
        throw std::invalid_argument("strategy '" + text + "': unknown strategy");
    }
    s.motion_prior = motion;
    s.include_first_frame = first;
    s.validate();
    return s;
}

std::string format_strategy(const SamplingStrategy& s) {
    std::string base;
    switch (s.kind) {
        case SamplingStrategy::Kind::previous:
            base = "prev1";
            break;
        case SamplingStrategy::Kind::consecutive:
            base = "consec:" + std::to_string(s.count);
            break;
        case SamplingStrategy::Kind::uniform:
            base = "uniform:" + std::to_string(s.count) + ":" + std::to_string(s.window);
            break;
        case SamplingStrategy::Kind::sparse_dense:
            base = "sparse-dense:" + std::to_string(s.dense_count) + ":" +
                   std::to_string(s.sparse_count) + ":" + std::to_string(s.window);
            break;
    }
    if (s.motion_prior) base += "+motion";
    if (s.include_first_frame) base += "+first";
    return base;
}

}  // namespace tvos
