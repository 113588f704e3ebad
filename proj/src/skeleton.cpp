#include "signkit/skeleton.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace signkit {

int Skeleton::root() const {
    int root = -1;
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (parents[i] == -1) {
            if (root != -1) throw DataError("skeleton has multiple roots");
            root = static_cast<int>(i);
        }
    }
    if (root == -1) throw DataError("skeleton has no root joint");
    return root;
}

const std::string* Skeleton::group_of(int joint) const {
    for (const auto& [name, members] : groups) {
        for (int m : members) {
            if (m == joint) return &name;
        }
    }
    return nullptr;
}

std::vector<int> Skeleton::traversal_order() const {
    const int n = static_cast<int>(parents.size());
    std::vector<std::vector<int>> children(n);
    int root_joint = root();
    for (int i = 0; i < n; ++i) {
        if (parents[i] == -1) continue;
        if (parents[i] < 0 || parents[i] >= n) throw DataError("parent index out of range");
        children[parents[i]].push_back(i);
    }
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> stack{root_joint};
    while (!stack.empty()) {
        int j = stack.back();
        stack.pop_back();
        order.push_back(j);
        for (auto it = children[j].rbegin(); it != children[j].rend(); ++it) stack.push_back(*it);
    }
    if (order.size() != parents.size()) throw DataError("skeleton parents do not form a tree");
    return order;
}

std::vector<std::string> validate_topology(const Skeleton& skeleton) {
    std::vector<std::string> violations;
    const int n = static_cast<int>(skeleton.parents.size());

    if (n == 0) {
        violations.push_back("skeleton has no joints");
        return violations;
    }
    if (skeleton.joint_names.size() != skeleton.parents.size())
        violations.push_back("joint_names and parents lengths differ");

    int root_count = 0;
    int root = -1;
    bool range_ok = true;
    for (int i = 0; i < n; ++i) {
        int p = skeleton.parents[i];
        if (p == -1) {
            ++root_count;
            root = i;
        } else if (p < 0 || p >= n) {
            violations.push_back("parent index of joint " + std::to_string(i) + " out of range");
            range_ok = false;
        } else if (p == i) {
            violations.push_back("joint " + std::to_string(i) + " is its own parent");
            range_ok = false;
        }
    }
    if (root_count == 0) violations.push_back("no root / cycle: no joint has parent -1");
    if (root_count > 1) violations.push_back("multiple roots");

    if (root_count == 1 && range_ok) {
        // A tree iff DFS from the root reaches every joint exactly once.
        std::vector<std::vector<int>> children(n);
        for (int i = 0; i < n; ++i) {
            if (skeleton.parents[i] >= 0) children[skeleton.parents[i]].push_back(i);
        }
        std::vector<bool> seen(n, false);
        std::vector<int> stack{root};
        std::size_t visited = 0;
        while (!stack.empty()) {
            int j = stack.back();
            stack.pop_back();
            if (seen[j]) continue;
            seen[j] = true;
            ++visited;
            for (int c : children[j]) stack.push_back(c);
        }
        if (visited != static_cast<std::size_t>(n))
            violations.push_back("cycle or unreachable joints: DFS from root visits " +
                                 std::to_string(visited) + " of " + std::to_string(n) + " joints");
    }

    // Each non-root joint labels exactly one bone group.
    std::vector<int> label_count(n, 0);
    for (const auto& [name, members] : skeleton.groups) {
        bool known = false;
        for (const char* g : kGroupNames) {
            if (name == g) known = true;
        }
        if (!known) violations.push_back("unknown group name '" + name + "'");
        for (int m : members) {
            if (m < 0 || m >= n) {
                violations.push_back("group '" + name + "' references joint " + std::to_string(m) +
                                     " out of range");
            } else {
                ++label_count[m];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        bool is_root = skeleton.parents[i] == -1;
        if (is_root && label_count[i] > 0)
            violations.push_back("root joint " + std::to_string(i) + " must not carry a group label");
        if (!is_root && label_count[i] == 0)
            violations.push_back("unlabeled bone: joint " + std::to_string(i) + " belongs to no group");
        if (!is_root && label_count[i] > 1)
            violations.push_back("joint " + std::to_string(i) + " belongs to multiple groups");
    }
    return violations;
}

LinkSet compute_links(const Pose& pose, const Skeleton& skeleton) {
    if (pose.size() != skeleton.joint_count())
        throw DataError("pose has " + std::to_string(pose.size()) + " joints, skeleton expects " +
                        std::to_string(skeleton.joint_count()));
    LinkSet out;
    out.links.assign(pose.size(), Vec3{});
    int root = skeleton.root();
    out.root_position = pose[root];
    for (std::size_t i = 0; i < pose.size(); ++i) {
        int p = skeleton.parents[i];
        if (p >= 0) out.links[i] = pose[i] - pose[p];
    }
    return out;
}

Pose reconstruct_pose(const LinkSet& link_set, const Skeleton& skeleton) {
    if (link_set.links.size() != skeleton.joint_count())
        throw DataError("link set size mismatch with skeleton");
    Pose pose(skeleton.joint_count());
    for (int j : skeleton.traversal_order()) {
        int p = skeleton.parents[j];
        pose[j] = (p == -1) ? link_set.root_position : pose[p] + link_set.links[j];
    }
    return pose;
}

std::vector<double> bone_lengths(const Pose& pose, const Skeleton& skeleton) {
    LinkSet ls = compute_links(pose, skeleton);
    std::vector<double> lengths(ls.links.size(), 0.0);
    for (std::size_t i = 0; i < ls.links.size(); ++i) {
        if (skeleton.parents[i] >= 0) lengths[i] = ls.links[i].norm();
    }
    return lengths;
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open skeleton file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("skeleton parse error in " + path.string() + ": " + e.what());
    }
    Skeleton s;
    try {
        s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
        s.parents = j.at("parents").get<std::vector<int>>();
        for (const auto& [name, members] : j.at("groups").items())
            s.groups[name] = members.get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("skeleton schema error in " + path.string() + ": " + e.what());
    }
    auto violations = validate_topology(s);
    if (!violations.empty()) {
        std::string msg = "invalid skeleton " + path.string() + ":";
        for (const auto& v : violations) msg += "\n  " + v;
        throw DataError(msg);
    }
    return s;
}

void Skeleton::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["joint_names"] = joint_names;
    j["parents"] = parents;
    j["groups"] = nlohmann::json::object();
    for (const auto& [name, members] : groups) j["groups"][name] = members;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write skeleton file: " + path.string());
    out << j.dump(2) << '\n';
}

Skeleton Skeleton::default_skeleton() {
    Skeleton s;
    s.joint_names = {"lower_neck", "neck",      "head",         "head_top",
                     "l_shoulder", "l_elbow",   "l_wrist",      "l_palm",
                     "l_finger_base", "l_finger_tip",
                     "r_shoulder", "r_elbow",   "r_wrist",      "r_palm",
                     "r_finger_base", "r_finger_tip"};
    s.parents = {-1, 0, 1, 2, 0, 4, 5, 6, 7, 8, 0, 10, 11, 12, 13, 14};
    s.groups["neck"] = {1, 2, 3};
    s.groups["shoulder"] = {4, 10};
    s.groups["upper_arm"] = {5, 11};
    s.groups["lower_arm"] = {6, 12};
    s.groups["palm"] = {7, 13};
    s.groups["finger"] = {8, 9, 14, 15};
    return s;
}

}  // namespace signkit
