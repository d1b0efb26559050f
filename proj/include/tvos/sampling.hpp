#pragma once

#include <string>
#include <vector>

namespace tvos {

/// Which spatial-locality sigma a reference frame is matched under.
enum class SigmaClass { local, distant };

/// Declarative description of which reference frames a target consults.
struct SamplingStrategy {
    enum class Kind { previous, consecutive, uniform, sparse_dense };

    Kind kind = Kind::sparse_dense;
    int count = 9;         // consecutive n / uniform count
    int window = 40;       // uniform / sparse_dense look-back
    int dense_count = 4;   // sparse_dense recent frames
    int sparse_count = 5;  // sparse_dense spread frames
    bool include_first_frame = false;
    bool motion_prior = false;

    static SamplingStrategy previous();
    static SamplingStrategy consecutive(int n);
    static SamplingStrategy uniform(int count, int window);
    static SamplingStrategy sparse_dense(int dense = 4, int sparse = 5, int window = 40);

    void validate() const;
    bool operator==(const SamplingStrategy&) const = default;
};

struct ReferenceSpec {
    int frame_index = 0;
    SigmaClass sigma_class = SigmaClass::local;

    bool operator==(const ReferenceSpec&) const = default;
};

/// Ordered most-recent-first; indices are unique and strictly below the target.
using ReferenceSet = std::vector<ReferenceSpec>;

/// Reference frames consulted when predicting frame t (t >= 1).
/// Offsets below 1 after clipping collapse onto frame 0; duplicates keep the
/// most recent sigma class. With motion_prior off every entry is local.
ReferenceSet select_references(int target, const SamplingStrategy& s);

/// The six tracking strategies of the temporal-dependency ablation, in
/// column order, tagged with their table names.
struct AblationEntry {
    std::string tag;
    SamplingStrategy strategy;
};
std::vector<AblationEntry> ablation_grid();

/// Strategy grammar: `prev1 | consec:N | uniform:N:W | sparse-dense[:D:S:W]`
/// with optional `+motion` / `+first` suffixes.
SamplingStrategy parse_strategy(const std::string& text);
std::string format_strategy(const SamplingStrategy& s);

}  // namespace tvos
