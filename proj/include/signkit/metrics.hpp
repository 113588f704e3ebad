#pragma once

#include <array>
#include <filesystem>

#include "signkit/posedata.hpp"

namespace signkit {

// Percent deviations per bone group (indexed like kGroupNames) plus the
// bone-count-weighted overall mean.
struct GroupReport {
    std::array<double, 6> group_values{};
    std::array<std::size_t, 6> group_counts{};
    double overall = 0.0;
    std::size_t excluded = 0;  // joints dropped for a near-zero reference statistic
};

struct FrameLengthStats {
    double mean_signed_rel_diff = 0.0;  // percent
    double mean_abs_rel_diff = 0.0;     // percent
    std::vector<double> bin_edges;      // 21 edges for 20 bins
    std::vector<std::size_t> pred_counts;
    std::vector<std::size_t> ref_counts;
};

enum class StatKind { variance, velocity };
enum class StatMode { global, local };

// Mean percent deviation of predicted bone lengths from reference, per group.
// Sequences pair up by id; when frame counts match the comparison is
// per-frame, otherwise each predicted frame is compared against the
// reference sequence's per-bone mean length.
GroupReport bone_length_deviation(const Dataset& pred, const Dataset& ref);

// Per-joint trace-of-covariance of positions (global) or parent-relative
// links (local) across the sequence's frames. Root uses absolute position in
// both modes.
std::vector<double> movement_variance(const PoseSequence& seq, const Skeleton& skeleton,
                                      StatMode mode);

// Per-joint mean Euclidean displacement per frame; requires T >= 2.
std::vector<double> movement_velocity(const PoseSequence& seq, const Skeleton& skeleton,
                                      StatMode mode);

// Percent deviation of per-sequence movement statistics, averaged per
// sequence, then per joint, then per group. Joints whose reference statistic
// falls below 1e-12 are excluded and tallied.
GroupReport movement_deviation(const Dataset& pred, const Dataset& ref, StatKind kind,
                               StatMode mode);

FrameLengthStats frame_length_stats(const Dataset& pred, const Dataset& ref);

struct MetricsBundle {
    GroupReport bone_length;
    GroupReport variance_global;
    GroupReport variance_local;
    GroupReport velocity_global;
    GroupReport velocity_local;
    FrameLengthStats frame_length;
};

MetricsBundle evaluate_all(const Dataset& pred, const Dataset& ref);

// Writes bone_length / variance_* / velocity_* / frame_length CSVs plus one
// SVG chart per CSV. Byte-deterministic for identical inputs.
void emit_report(const MetricsBundle& bundle, const std::filesystem::path& out_dir);

}  // namespace signkit
