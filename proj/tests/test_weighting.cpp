#include <filesystem>
#include <random>

#include "doctest.h"
#include "signkit/weighting.hpp"

using namespace signkit;

namespace {

Skeleton chain(std::size_t joints) {
    Skeleton sk;
    for (std::size_t i = 0; i < joints; ++i) {
        sk.joint_names.push_back("j" + std::to_string(i));
        sk.parents.push_back(static_cast<int>(i) - 1);
        if (i > 0) sk.groups["finger"].push_back(static_cast<int>(i));
    }
    return sk;
}

Dataset one_sequence(const Skeleton& sk, const Frames& frames) {
    Dataset d;
    d.skeleton = sk;
    PoseSequence seq;
    seq.id = "s0";
    seq.tokens = {"t"};
    seq.frames = frames;
    d.sequences.push_back(seq);
    return d;
}

}  // namespace

TEST_CASE("joint_variances hand examples") {
    Skeleton sk = chain(2);

    SUBCASE("static dataset has zero variances") {
        Frames frames(3, Pose{{1, 2, 3}, {2, 2, 3}});
        JointVariances v = joint_variances(one_sequence(sk, frames));
        for (double s : v.sigma_sq) CHECK(s == 0.0);
    }

    SUBCASE("root variance from two frames") {
        // Root x coordinates 0 and 2: mean 1, population variance 1.
        Frames frames = {Pose{{0, 0, 0}, {1, 0, 0}}, Pose{{2, 0, 0}, {3, 0, 0}}};
        JointVariances v = joint_variances(one_sequence(sk, frames));
        CHECK(v.sigma_sq[0] == doctest::Approx(1.0));
        CHECK(v.sigma_sq[1] == doctest::Approx(0.0));  // link is constant (1,0,0)
    }

    SUBCASE("global translation leaves variances unchanged") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Frames frames(4, Pose(2));
        for (Pose& f : frames)
            for (Vec3& v : f) v = {u(rng), u(rng), u(rng)};
        JointVariances a = joint_variances(one_sequence(sk, frames));
        for (Pose& f : frames)
            for (Vec3& v : f) v += Vec3{5, 5, 5};
        JointVariances b = joint_variances(one_sequence(sk, frames));
        for (std::size_t i = 0; i < a.sigma_sq.size(); ++i)
            CHECK(b.sigma_sq[i] == doctest::Approx(a.sigma_sq[i]));
    }

    SUBCASE("empty dataset is an error") {
        Dataset d;
        d.skeleton = sk;
        CHECK_THROWS_AS(joint_variances(d), DataError);
    }
}

TEST_CASE("parent_relative_weights hand examples") {
    SUBCASE("variances [1,1,2] give weights [0.75,0.75,0.5]") {
        JointWeights w = parent_relative_weights(JointVariances{{1.0, 1.0, 2.0}});
        CHECK(w.w[0] == doctest::Approx(0.75));
        CHECK(w.w[1] == doctest::Approx(0.75));
        CHECK(w.w[2] == doctest::Approx(0.5));
    }

    SUBCASE("uniform variances give uniform weights") {
        JointWeights w = parent_relative_weights(JointVariances{{3.0, 3.0, 3.0, 3.0}});
        for (double x : w.w) CHECK(x == doctest::Approx(0.75));
    }

    SUBCASE("all-zero variances fall back to weight 1") {
        JointWeights w = parent_relative_weights(JointVariances{{0.0, 0.0, 0.0}});
        for (double x : w.w) CHECK(x == 1.0);
    }
}

TEST_CASE("weight invariants on random variance vectors") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> nsel(2, 24);
    for (int k = 0; k < 50; ++k) {
        int n = nsel(rng);
        JointVariances v;
        for (int i = 0; i < n; ++i) v.sigma_sq.push_back(u(rng));
        JointWeights w = parent_relative_weights(v);
        double sum = 0.0;
        for (double x : w.w) sum += x;
        CHECK(std::abs(sum - (n - 1)) < 1e-9);
        // smaller variance <=> strictly larger weight
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (v.sigma_sq[i] < v.sigma_sq[j]) CHECK(w.w[i] > w.w[j]);
    }
}

TEST_CASE("bone_length_lambda hand examples") {
    Skeleton sk = chain(2);

    SUBCASE("pred == ref gives all-zero lambda") {
        Frames frames = {Pose{{0, 0, 0}, {1, 0, 0}}, Pose{{0, 0, 0}, {0, 2, 0}}};
        Dataset d = one_sequence(sk, frames);
        BoneLambdas l = bone_length_lambda(d, d);
        for (double x : l.lambda) CHECK(x == 0.0);
    }

    SUBCASE("ref lengths [2,4] vs pred [3,3] give 0.375") {
        Dataset ref = one_sequence(sk, {Pose{{0, 0, 0}, {2, 0, 0}}, Pose{{0, 0, 0}, {4, 0, 0}}});
        Dataset pred = one_sequence(sk, {Pose{{0, 0, 0}, {3, 0, 0}}, Pose{{0, 0, 0}, {3, 0, 0}}});
        BoneLambdas l = bone_length_lambda(pred, ref);
        CHECK(l.lambda[1] == doctest::Approx(0.375));
    }

    SUBCASE("uniform scaling of both datasets leaves lambda unchanged") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        Frames rf(3, Pose(2)), pf(3, Pose(2));
        for (Pose& f : rf)
            for (Vec3& v : f) v = {u(rng), u(rng), u(rng)};
        for (Pose& f : pf)
            for (Vec3& v : f) v = {u(rng), u(rng), u(rng)};
        Dataset ref = one_sequence(sk, rf);
        Dataset pred = one_sequence(sk, pf);
        BoneLambdas a = bone_length_lambda(pred, ref);
        for (Pose& f : ref.sequences[0].frames)
            for (Vec3& v : f) v = v * 10.0;
        for (Pose& f : pred.sequences[0].frames)
            for (Vec3& v : f) v = v * 10.0;
        BoneLambdas b = bone_length_lambda(pred, ref);
        for (std::size_t i = 1; i < a.lambda.size(); ++i)
            CHECK(b.lambda[i] == doctest::Approx(a.lambda[i]));
    }

    SUBCASE("misaligned datasets are an error") {
        Dataset ref = one_sequence(sk, Frames(2, Pose{{0, 0, 0}, {1, 0, 0}}));
        Dataset pred = one_sequence(sk, Frames(3, Pose{{0, 0, 0}, {1, 0, 0}}));
        CHECK_THROWS_AS(bone_length_lambda(pred, ref), DataError);
    }
}

TEST_CASE("weights and lambdas serialize to JSON") {
    namespace fs = std::filesystem;
    fs::path wp = fs::temp_directory_path() / "signkit_test_w.json";
    fs::path lp = fs::temp_directory_path() / "signkit_test_l.json";
    JointWeights w{{0.25, 0.5, 1.0}};
    w.save(wp);
    CHECK(JointWeights::load(wp).w == w.w);
    BoneLambdas l{{0.0, 1.5, 2.0}};
    l.save(lp);
    CHECK(BoneLambdas::load(lp).lambda == l.lambda);
    fs::remove(wp);
    fs::remove(lp);
}
