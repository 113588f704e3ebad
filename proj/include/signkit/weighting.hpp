#pragma once

#include <filesystem>
#include <vector>

#include "signkit/posedata.hpp"

namespace signkit {

// Per-joint spatio-temporal variance: trace of the per-component population
// covariance, pooled across all frames of all sequences. Root uses absolute
// position, other joints their parent-relative link.
struct JointVariances {
    std::vector<double> sigma_sq;
};

// Parent-relative loss weights, w_i = 1 - sigma_i^2 / sum(sigma^2).
struct JointWeights {
    std::vector<double> w;

    static JointWeights uniform(std::size_t joints);
    static JointWeights load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Per-bone reweighting factors for the bone-length loss, indexed by child
// joint (root slot 0).
struct BoneLambdas {
    std::vector<double> lambda;

    static BoneLambdas uniform(std::size_t joints);
    static BoneLambdas load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

JointVariances joint_variances(const Dataset& dataset);

JointWeights parent_relative_weights(const JointVariances& variances);

// Mean relative absolute bone-length error per bone, over all aligned frames
// of the dev set. pred and ref must have matching ids and frame counts.
BoneLambdas bone_length_lambda(const Dataset& pred, const Dataset& ref);

// Throws DataError unless pred and ref pair up by id with equal frame counts.
void require_alignment(const Dataset& pred, const Dataset& ref, bool same_frame_counts);

}  // namespace signkit
