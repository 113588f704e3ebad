#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "signkit/geometry.hpp"

namespace signkit {

// The six bone groups, ordered top-to-bottom along the body.
inline constexpr std::array<const char*, 6> kGroupNames = {
    "neck", "shoulder", "upper_arm", "lower_arm", "palm", "finger"};

// Joint hierarchy rooted at the lower neck. Bone i is the link from
// parent(i) to joint i; group labels attach to the child joint.
struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> parents;                         // -1 marks the root
    std::map<std::string, std::vector<int>> groups;   // group name -> child joint indices

    std::size_t joint_count() const { return parents.size(); }

    // Index of the unique root joint; throws DataError if absent.
    int root() const;

    // Group name of the bone ending at `joint`, or nullptr for the root /
    // unlabeled joints.
    const std::string* group_of(int joint) const;

    // Joints in parent-before-child order starting at the root.
    std::vector<int> traversal_order() const;

    static Skeleton load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // 16-joint demo skeleton: lower neck root, head chain, and a full
    // shoulder-to-fingertip chain per side.
    static Skeleton default_skeleton();
};

// Every violated invariant, as human-readable messages. Empty means valid.
std::vector<std::string> validate_topology(const Skeleton& skeleton);

// Parent-relative decomposition of one pose. links is indexed by child
// joint; the root slot is kept zero so bone i and joint i share an index.
struct LinkSet {
    Vec3 root_position;
    std::vector<Vec3> links;
};

LinkSet compute_links(const Pose& pose, const Skeleton& skeleton);
Pose reconstruct_pose(const LinkSet& link_set, const Skeleton& skeleton);

// Per-bone Euclidean lengths, indexed by child joint (root slot 0).
std::vector<double> bone_lengths(const Pose& pose, const Skeleton& skeleton);

}  // namespace signkit
