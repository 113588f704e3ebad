#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "signkit/metrics.hpp"

using namespace signkit;
namespace fs = std::filesystem;

namespace {

Skeleton chain(std::size_t joints, const char* group = "finger") {
    Skeleton sk;
    for (std::size_t i = 0; i < joints; ++i) {
        sk.joint_names.push_back("j" + std::to_string(i));
        sk.parents.push_back(static_cast<int>(i) - 1);
        if (i > 0) sk.groups[group].push_back(static_cast<int>(i));
    }
    return sk;
}

Dataset wrap(const Skeleton& sk, std::vector<Frames> sequences) {
    Dataset d;
    d.skeleton = sk;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        PoseSequence seq;
        seq.id = "s" + std::to_string(s);
        seq.tokens = {"t"};
        seq.frames = std::move(sequences[s]);
        d.sequences.push_back(std::move(seq));
    }
    return d;
}

// Direct transliteration of the evaluation formulas, written as plain loops
// with no shared code, used as an independent oracle.
std::vector<double> oracle_variance(const PoseSequence& seq, const Skeleton& sk, bool local) {
    std::size_t n = sk.joint_count(), T = seq.frames.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sx = 0, sy = 0, sz = 0;
        std::vector<Vec3> samples;
        for (std::size_t t = 0; t < T; ++t) {
            Vec3 v = seq.frames[t][i];
            if (local && sk.parents[i] >= 0) v = v - seq.frames[t][sk.parents[i]];
            samples.push_back(v);
            sx += v.x;
            sy += v.y;
            sz += v.z;
        }
        double mx = sx / T, my = sy / T, mz = sz / T;
        double acc = 0;
        for (const Vec3& v : samples)
            acc += (v.x - mx) * (v.x - mx) + (v.y - my) * (v.y - my) + (v.z - mz) * (v.z - mz);
        out[i] = acc / static_cast<double>(T);
    }
    return out;
}

std::vector<double> oracle_velocity(const PoseSequence& seq, const Skeleton& sk, bool local) {
    std::size_t n = sk.joint_count(), T = seq.frames.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::size_t t = 0; t + 1 < T; ++t) {
            Vec3 a = seq.frames[t][i], b = seq.frames[t + 1][i];
            if (local && sk.parents[i] >= 0) {
                a = a - seq.frames[t][sk.parents[i]];
                b = b - seq.frames[t + 1][sk.parents[i]];
            }
            acc += (b - a).norm();
        }
        out[i] = acc / static_cast<double>(T - 1);
    }
    return out;
}

Dataset random_dataset(const Skeleton& sk, std::size_t count, int min_frames,
                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> tlen(min_frames, 5);
    std::vector<Frames> seqs;
    for (std::size_t s = 0; s < count; ++s) {
        Frames frames(tlen(rng), Pose(sk.joint_count()));
        for (Pose& f : frames)
            for (Vec3& v : f) v = {u(rng), u(rng), u(rng)};
        seqs.push_back(std::move(frames));
    }
    return wrap(sk, std::move(seqs));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("bone_length_deviation hand examples") {
    SUBCASE("identity gives all-zero groups") {
        Skeleton sk = chain(3);
        std::mt19937_64 rng(1);
        Dataset d = random_dataset(sk, 4, 1, rng);
        GroupReport r = bone_length_deviation(d, d);
        CHECK(r.overall == 0.0);
        for (double v : r.group_values) CHECK(v == 0.0);
    }

    SUBCASE("single finger bone, ref 5 vs pred 4, gives finger 20%") {
        Skeleton sk = chain(2, "finger");
        Dataset ref = wrap(sk, {{Pose{{0, 0, 0}, {0, 3, 4}}}});
        Dataset pred = wrap(sk, {{Pose{{0, 0, 0}, {0, 0, 4}}}});
        GroupReport r = bone_length_deviation(pred, ref);
        CHECK(r.group_values[5] == doctest::Approx(20.0));  // finger slot
        CHECK(r.overall == doctest::Approx(20.0));
    }

    SUBCASE("uniform 0.9 scaling gives 10% in every group") {
        Skeleton sk = Skeleton::default_skeleton();
        std::mt19937_64 rng(2);
        Dataset ref = random_dataset(sk, 3, 1, rng);
        Dataset pred = ref;
        for (PoseSequence& s : pred.sequences)
            for (Pose& f : s.frames)
                for (Vec3& v : f) v = v * 0.9;
        GroupReport r = bone_length_deviation(pred, ref);
        for (std::size_t g = 0; g < 6; ++g)
            if (r.group_counts[g] > 0) CHECK(r.group_values[g] == doctest::Approx(10.0));
        CHECK(r.overall == doctest::Approx(10.0));
    }

    SUBCASE("overall is the bone-count-weighted mean of groups") {
        Skeleton sk = Skeleton::default_skeleton();
        std::mt19937_64 rng(3);
        Dataset ref = random_dataset(sk, 5, 1, rng);
        Dataset pred = random_dataset(sk, 5, 1, rng);
        // align frame counts
        for (std::size_t s = 0; s < ref.sequences.size(); ++s)
            pred.sequences[s].frames.resize(ref.sequences[s].frames.size(),
                                            pred.sequences[s].frames[0]);
        GroupReport r = bone_length_deviation(pred, ref);
        double acc = 0;
        std::size_t n = 0;
        for (std::size_t g = 0; g < 6; ++g) {
            acc += r.group_values[g] * static_cast<double>(r.group_counts[g]);
            n += r.group_counts[g];
        }
        CHECK(std::abs(r.overall - acc / static_cast<double>(n)) < 1e-9);
    }
}

TEST_CASE("movement_variance hand examples") {
    Skeleton sk = chain(1);

    SUBCASE("constant sequence has zero variance in both modes") {
        PoseSequence seq{"s", {"t"}, Frames(3, Pose{{1, 2, 3}})};
        for (StatMode m : {StatMode::global, StatMode::local})
            for (double v : movement_variance(seq, sk, m)) CHECK(v == 0.0);
    }

    SUBCASE("positions (0,0,0),(2,0,0) give global variance 1") {
        PoseSequence seq{"s", {"t"}, {Pose{{0, 0, 0}}, Pose{{2, 0, 0}}}};
        CHECK(movement_variance(seq, sk, StatMode::global)[0] == doctest::Approx(1.0));
    }

    SUBCASE("rigid translation changes global but not local variance") {
        Skeleton sk2 = chain(2);
        PoseSequence seq{"s", {"t"}, {Pose{{0, 0, 0}, {1, 0, 0}}, Pose{{5, 0, 0}, {6, 0, 0}}}};
        auto local = movement_variance(seq, sk2, StatMode::local);
        auto global = movement_variance(seq, sk2, StatMode::global);
        CHECK(local[1] == doctest::Approx(0.0));     // link constant
        CHECK(global[1] > 1.0);                       // joint itself moved
    }
}

TEST_CASE("movement_velocity hand examples") {
    Skeleton sk = chain(1);

    SUBCASE("frames (0,0,0),(1,0,0),(1,1,0) give velocity 1") {
        PoseSequence seq{"s", {"t"}, {Pose{{0, 0, 0}}, Pose{{1, 0, 0}}, Pose{{1, 1, 0}}}};
        CHECK(movement_velocity(seq, sk, StatMode::global)[0] == doctest::Approx(1.0));
    }

    SUBCASE("constant sequence has zero velocity") {
        PoseSequence seq{"s", {"t"}, Frames(4, Pose{{1, 1, 1}})};
        CHECK(movement_velocity(seq, sk, StatMode::global)[0] == 0.0);
    }

    SUBCASE("single frame is an error") {
        PoseSequence seq{"s", {"t"}, Frames(1, Pose{{0, 0, 0}})};
        CHECK_THROWS_WITH_AS(movement_velocity(seq, sk, StatMode::global),
                             doctest::Contains("velocity undefined"), DataError);
    }
}

TEST_CASE("module statistics match the loop-transliterated oracle") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> nsel(2, 6);
    for (int k = 0; k < 200; ++k) {
        Skeleton sk = chain(static_cast<std::size_t>(nsel(rng)));
        Dataset d = random_dataset(sk, 1, 2, rng);
        const PoseSequence& seq = d.sequences[0];
        for (bool local : {false, true}) {
            StatMode mode = local ? StatMode::local : StatMode::global;
            auto var = movement_variance(seq, sk, mode);
            auto ovar = oracle_variance(seq, sk, local);
            auto vel = movement_velocity(seq, sk, mode);
            auto ovel = oracle_velocity(seq, sk, local);
            for (std::size_t i = 0; i < sk.joint_count(); ++i) {
                CHECK(std::abs(var[i] - ovar[i]) < 1e-12);
                CHECK(std::abs(vel[i] - ovel[i]) < 1e-12);
            }
        }
    }
}

TEST_CASE("movement_deviation") {
    Skeleton sk = chain(3);
    std::mt19937_64 rng(77);

    SUBCASE("identity gives zero and excludes static reference joints") {
        Dataset d = random_dataset(sk, 3, 2, rng);
        GroupReport r = movement_deviation(d, d, StatKind::variance, StatMode::global);
        for (std::size_t g = 0; g < 6; ++g)
            if (r.group_counts[g] > 0) CHECK(r.group_values[g] == doctest::Approx(0.0));
        CHECK(r.excluded == 0);
    }

    SUBCASE("velocity uniformly 1.1x reference gives 10% deviation") {
        Dataset ref = random_dataset(sk, 2, 3, rng);
        Dataset pred = ref;
        // scale displacements by 1.1 about frame 0
        for (PoseSequence& s : pred.sequences) {
            Pose base = s.frames[0];
            for (Pose& f : s.frames)
                for (std::size_t i = 0; i < f.size(); ++i)
                    f[i] = base[i] + (f[i] - base[i]) * 1.1;
        }
        GroupReport r = movement_deviation(pred, ref, StatKind::velocity, StatMode::global);
        CHECK(r.overall == doctest::Approx(10.0).epsilon(1e-9));
    }

    SUBCASE("static reference joint is excluded and tallied") {
        Frames rf(3, Pose{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});  // fully static ref
        Frames pf = rf;
        pf[1][2].y = 0.5;  // prediction moves joint 2
        Dataset ref = wrap(sk, {rf});
        Dataset pred = wrap(sk, {pf});
        GroupReport r = movement_deviation(pred, ref, StatKind::variance, StatMode::global);
        CHECK(r.excluded == 3);  // every reference joint is static
    }
}

TEST_CASE("frame_length_stats hand examples") {
    Skeleton sk = chain(2);

    SUBCASE("ref [10,20] vs pred [11,18] gives mean signed 0, mean abs 10") {
        auto make = [&](std::vector<int> lens) {
            std::vector<Frames> seqs;
            for (int T : lens) seqs.push_back(Frames(T, Pose{{0, 0, 0}, {1, 0, 0}}));
            return wrap(sk, std::move(seqs));
        };
        FrameLengthStats st = frame_length_stats(make({11, 18}), make({10, 20}));
        CHECK(st.mean_signed_rel_diff == doctest::Approx(0.0));
        CHECK(st.mean_abs_rel_diff == doctest::Approx(10.0));
        std::size_t pred_total = 0, ref_total = 0;
        for (std::size_t c : st.pred_counts) pred_total += c;
        for (std::size_t c : st.ref_counts) ref_total += c;
        CHECK(pred_total == 2);
        CHECK(ref_total == 2);
    }

    SUBCASE("identity gives zero diffs") {
        std::mt19937_64 rng(88);
        Dataset d = random_dataset(sk, 4, 2, rng);
        FrameLengthStats st = frame_length_stats(d, d);
        CHECK(st.mean_signed_rel_diff == 0.0);
        CHECK(st.mean_abs_rel_diff == 0.0);
    }
}

TEST_CASE("emit_report is byte-deterministic and matches the bundle") {
    Skeleton sk = Skeleton::default_skeleton();
    std::mt19937_64 rng(99);
    Dataset ref = random_dataset(sk, 2, 3, rng);
    Dataset pred = ref;
    for (PoseSequence& s : pred.sequences)
        for (Pose& f : s.frames)
            for (Vec3& v : f) v = v * 0.95;

    MetricsBundle bundle = evaluate_all(pred, ref);
    fs::path dir_a = fs::temp_directory_path() / "signkit_test_report_a";
    fs::path dir_b = fs::temp_directory_path() / "signkit_test_report_b";
    emit_report(bundle, dir_a);
    emit_report(bundle, dir_b);

    const char* names[] = {"bone_length", "variance_global", "variance_local",
                           "velocity_global", "velocity_local", "frame_length"};
    for (const char* n : names) {
        CHECK(slurp(dir_a / (std::string(n) + ".csv")) == slurp(dir_b / (std::string(n) + ".csv")));
        CHECK(slurp(dir_a / (std::string(n) + ".svg")) == slurp(dir_b / (std::string(n) + ".svg")));
    }

    // the fixture's bone-length deviation is 5% by construction
    std::string csv = slurp(dir_a / "bone_length.csv");
    CHECK(csv.find("overall,5.0000") != std::string::npos);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
