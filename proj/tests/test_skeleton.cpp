#include <filesystem>
#include <random>

#include "doctest.h"
#include "signkit/skeleton.hpp"

using namespace signkit;

namespace {

// Minimal 3-joint chain: root -> a -> b, both bones labeled.
Skeleton chain3() {
    Skeleton sk;
    sk.joint_names = {"root", "a", "b"};
    sk.parents = {-1, 0, 1};
    sk.groups["neck"] = {1};
    sk.groups["shoulder"] = {2};
    return sk;
}

}  // namespace

TEST_CASE("validate_topology accepts a minimal chain") {
    CHECK(validate_topology(chain3()).empty());
}

TEST_CASE("validate_topology flags multiple roots") {
    Skeleton sk = chain3();
    sk.parents = {-1, -1, 0};
    auto violations = validate_topology(sk);
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations)
        if (v.find("multiple roots") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_topology flags a rootless cycle") {
    Skeleton sk = chain3();
    sk.parents = {2, 0, 1};  // 0 -> 2 -> 1 -> 0
    auto violations = validate_topology(sk);
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations)
        if (v.find("no root") != std::string::npos || v.find("cycle") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("validate_topology flags unlabeled bones") {
    Skeleton sk = chain3();
    sk.groups.erase("shoulder");  // joint 2 now has no group
    auto violations = validate_topology(sk);
    REQUIRE(!violations.empty());
}

TEST_CASE("default skeleton is valid and exercises all six groups") {
    Skeleton sk = Skeleton::default_skeleton();
    CHECK(validate_topology(sk).empty());
    for (const char* g : kGroupNames) {
        REQUIRE(sk.groups.count(g) == 1);
        CHECK(!sk.groups.at(g).empty());
    }
    CHECK(sk.joint_count() == 16);
    CHECK(sk.root() == 0);
}

TEST_CASE("compute_links on hand examples") {
    Skeleton sk = chain3();

    SUBCASE("single offset") {
        Skeleton two;
        two.joint_names = {"root", "a"};
        two.parents = {-1, 0};
        two.groups["neck"] = {1};
        LinkSet ls = compute_links({{0, 0, 0}, {1, 0, 0}}, two);
        CHECK(ls.root_position.x == 0.0);
        CHECK(ls.links[1].x == 1.0);
        CHECK(ls.links[1].y == 0.0);
    }

    SUBCASE("coincident joints give zero link") {
        Skeleton two;
        two.joint_names = {"root", "a"};
        two.parents = {-1, 0};
        two.groups["neck"] = {1};
        LinkSet ls = compute_links({{1, 1, 1}, {1, 1, 1}}, two);
        CHECK(ls.links[1].norm() == 0.0);
    }

    SUBCASE("hand subtraction along the chain") {
        LinkSet ls = compute_links({{0, 0, 0}, {0, 3, 4}, {0, 3, 6}}, sk);
        CHECK(ls.links[1].y == doctest::Approx(3.0));
        CHECK(ls.links[1].z == doctest::Approx(4.0));
        CHECK(ls.links[2].y == doctest::Approx(0.0));
        CHECK(ls.links[2].z == doctest::Approx(2.0));
    }
}

TEST_CASE("reconstruct_pose inverts compute_links") {
    Skeleton sk = chain3();

    SUBCASE("all-zero links collapse to the root") {
        LinkSet ls;
        ls.root_position = {2, 3, 4};
        ls.links.assign(3, Vec3{});
        Pose p = reconstruct_pose(ls, sk);
        for (const Vec3& v : p) {
            CHECK(v.x == doctest::Approx(2.0));
            CHECK(v.y == doctest::Approx(3.0));
            CHECK(v.z == doctest::Approx(4.0));
        }
    }

    SUBCASE("round trip on 100 random poses") {
        Skeleton def = Skeleton::default_skeleton();
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int k = 0; k < 100; ++k) {
            Pose p(def.joint_count());
            for (Vec3& v : p) v = {u(rng), u(rng), u(rng)};
            Pose back = reconstruct_pose(compute_links(p, def), def);
            for (std::size_t i = 0; i < p.size(); ++i) {
                CHECK(std::abs(back[i].x - p[i].x) < 1e-12);
                CHECK(std::abs(back[i].y - p[i].y) < 1e-12);
                CHECK(std::abs(back[i].z - p[i].z) < 1e-12);
            }
        }
    }
}

TEST_CASE("compute_links is translation-equivariant") {
    Skeleton sk = Skeleton::default_skeleton();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Pose p(sk.joint_count());
    for (Vec3& v : p) v = {u(rng), u(rng), u(rng)};
    Vec3 shift{5.0, -1.5, 2.25};
    Pose q = p;
    for (Vec3& v : q) v += shift;

    LinkSet a = compute_links(p, sk);
    LinkSet b = compute_links(q, sk);
    CHECK(b.root_position.x == doctest::Approx(a.root_position.x + shift.x));
    for (std::size_t i = 0; i < a.links.size(); ++i) {
        CHECK(b.links[i].x == doctest::Approx(a.links[i].x));
        CHECK(b.links[i].y == doctest::Approx(a.links[i].y));
        CHECK(b.links[i].z == doctest::Approx(a.links[i].z));
    }
}

TEST_CASE("compute_links rejects a pose of the wrong size") {
    CHECK_THROWS_AS(compute_links(Pose(2), chain3()), DataError);
}

TEST_CASE("skeleton JSON round-trips") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "signkit_test_skeleton.json";
    Skeleton sk = Skeleton::default_skeleton();
    sk.save(path);
    Skeleton back = Skeleton::load(path);
    CHECK(back.joint_names == sk.joint_names);
    CHECK(back.parents == sk.parents);
    CHECK(back.groups == sk.groups);
    fs::remove(path);
}
