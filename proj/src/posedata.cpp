#include "signkit/posedata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace signkit {

void validate_dataset(const Dataset& dataset) {
    auto violations = validate_topology(dataset.skeleton);
    if (!violations.empty()) throw DataError("dataset carries an invalid skeleton: " + violations.front());
    const std::size_t n = dataset.skeleton.joint_count();
    for (const auto& seq : dataset.sequences) {
        if (seq.frames.empty()) throw DataError("sequence '" + seq.id + "' has no frames");
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            if (seq.frames[t].size() != n)
                throw DataError("joint-count mismatch at " + seq.id + "/frame " + std::to_string(t) +
                                ": got " + std::to_string(seq.frames[t].size()) + ", expected " +
                                std::to_string(n));
            for (const Vec3& p : seq.frames[t]) {
                if (!p.finite())
                    throw DataError("non-finite coordinate in sequence '" + seq.id + "' frame " +
                                    std::to_string(t));
            }
        }
    }
}

namespace {

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path.string());
    for (const auto& seq : dataset.sequences) {
        std::string line = "{\"id\":\"" + escape_json(seq.id) + "\",\"tokens\":[";
        for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
            if (i) line += ',';
            line += '"' + escape_json(seq.tokens[i]) + '"';
        }
        line += "],\"frames\":[";
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            if (t) line += ',';
            line += '[';
            for (std::size_t j = 0; j < seq.frames[t].size(); ++j) {
                if (j) line += ',';
                line += '[';
                append_number(line, seq.frames[t][j].x);
                line += ',';
                append_number(line, seq.frames[t][j].y);
                line += ',';
                append_number(line, seq.frames[t][j].z);
                line += ']';
            }
            line += ']';
        }
        line += "]}";
        out << line << '\n';
    }
    if (!out) throw IoError("write failure on dataset file: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, const Skeleton& skeleton, Split split) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path.string());
    Dataset ds;
    ds.skeleton = skeleton;
    ds.split = split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("parse error at " + path.string() + ":" + std::to_string(line_no) + ": " +
                            e.what());
        }
        PoseSequence seq;
        if (!j.contains("id") || !j["id"].is_string())
            throw DataError("missing/invalid \"id\" at " + path.string() + ":" + std::to_string(line_no));
        seq.id = j["id"].get<std::string>();
        if (!j.contains("tokens") || !j["tokens"].is_array())
            throw DataError("missing/invalid \"tokens\" in sequence '" + seq.id + "'");
        for (const auto& t : j["tokens"]) seq.tokens.push_back(t.get<std::string>());
        if (!j.contains("frames") || !j["frames"].is_array())
            throw DataError("missing/invalid \"frames\" in sequence '" + seq.id + "'");
        std::size_t frame_idx = 0;
        for (const auto& frame : j["frames"]) {
            Pose pose;
            for (const auto& coord : frame) {
                if (!coord.is_array() || coord.size() != 3 || !coord[0].is_number() ||
                    !coord[1].is_number() || !coord[2].is_number())
                    throw DataError("malformed coordinate in sequence '" + seq.id + "' frame " +
                                    std::to_string(frame_idx));
                pose.push_back(
                    {coord[0].get<double>(), coord[1].get<double>(), coord[2].get<double>()});
            }
            seq.frames.push_back(std::move(pose));
            ++frame_idx;
        }
        ds.sequences.push_back(std::move(seq));
    }
    validate_dataset(ds);
    return ds;
}

PoseSequence normalize_skeleton_scale(const PoseSequence& sequence, const Skeleton& skeleton,
                                      const std::vector<double>& reference_lengths) {
    if (reference_lengths.size() != skeleton.joint_count())
        throw DataError("reference_lengths size mismatch with skeleton");
    for (std::size_t i = 0; i < reference_lengths.size(); ++i) {
        if (skeleton.parents[i] >= 0 && reference_lengths[i] <= 0.0)
            throw DataError("non-positive reference bone length at joint " + std::to_string(i));
    }
    PoseSequence out = sequence;
    for (std::size_t t = 0; t < out.frames.size(); ++t) {
        LinkSet ls = compute_links(out.frames[t], skeleton);
        double mean_len = 0.0;
        double mean_ratio = 0.0;
        std::size_t bones = 0;
        for (std::size_t i = 0; i < ls.links.size(); ++i) {
            if (skeleton.parents[i] < 0) continue;
            double len = ls.links[i].norm();
            mean_len += len;
            mean_ratio += len / reference_lengths[i];
            ++bones;
        }
        mean_len /= static_cast<double>(bones);
        mean_ratio /= static_cast<double>(bones);
        if (mean_len < 1e-8)
            throw DataError("degenerate collapsed frame " + std::to_string(t) + " in sequence '" +
                            sequence.id + "'");
        double scale = 1.0 / mean_ratio;
        for (std::size_t i = 0; i < ls.links.size(); ++i) ls.links[i] = ls.links[i] * scale;
        out.frames[t] = reconstruct_pose(ls, skeleton);
    }
    return out;
}

Pose add_gaussian_noise(const Pose& pose, double stddev, std::mt19937_64& rng) {
    if (stddev < 0.0) throw DataError("negative noise stddev");
    if (stddev == 0.0) return pose;
    std::normal_distribution<double> dist(0.0, stddev);
    Pose out = pose;
    for (Vec3& p : out) {
        p.x += dist(rng);
        p.y += dist(rng);
        p.z += dist(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

// Link direction from elevation/azimuth; unit length by construction.
Vec3 direction(double elev, double azim) {
    return {std::cos(elev) * std::cos(azim), std::sin(elev), std::cos(elev) * std::sin(azim)};
}

struct Angles {
    double elev = 0.0;
    double azim = 0.0;
};

constexpr double kPi = std::numbers::pi;

// Rest angles per child joint of the default 16-joint skeleton.
std::vector<Angles> rest_angles() {
    std::vector<Angles> a(16);
    a[1] = {kPi / 2, 0.0};            // neck
    a[2] = {kPi / 2, 0.0};            // head
    a[3] = {kPi / 2, 0.0};            // head_top
    a[4] = {0.0, kPi};                // l_shoulder
    a[5] = {-1.25, 0.9 * kPi};        // l_elbow
    a[6] = {-1.10, 0.9 * kPi};        // l_wrist
    a[7] = {-1.00, 0.9 * kPi};        // l_palm
    a[8] = {-0.95, 0.9 * kPi};        // l_finger_base
    a[9] = {-0.90, 0.9 * kPi};        // l_finger_tip
    a[10] = {0.0, 0.0};               // r_shoulder
    a[11] = {-1.25, 0.1 * kPi};       // r_elbow
    a[12] = {-1.10, 0.1 * kPi};       // r_wrist
    a[13] = {-1.00, 0.1 * kPi};       // r_palm
    a[14] = {-0.95, 0.1 * kPi};       // r_finger_base
    a[15] = {-0.90, 0.1 * kPi};       // r_finger_tip
    return a;
}

struct Effect {
    int joint;
    double elev_amp;
    double azim_amp;
    int cycles;  // 0 = single smooth bump, k = k oscillations under the bump
};

struct Primitive {
    std::string name;
    int duration;  // frames at nominal rate, 20-60
    std::vector<Effect> effects;
};

const std::vector<Primitive>& primitive_table() {
    static const std::vector<Primitive> table = {
        {"raise_left", 40, {{5, 1.6, 0.0, 0}, {6, 1.8, 0.0, 0}, {7, 1.5, 0.0, 0}}},
        {"raise_right", 40, {{11, 1.6, 0.0, 0}, {12, 1.8, 0.0, 0}, {13, 1.5, 0.0, 0}}},
        {"wave_left", 50, {{5, 1.4, 0.0, 0}, {6, 1.6, 0.9, 2}, {7, 1.2, 0.5, 2}}},
        {"wave_right", 50, {{11, 1.4, 0.0, 0}, {12, 1.6, -0.9, 2}, {13, 1.2, -0.5, 2}}},
        {"pinch_left", 30, {{8, -0.9, 0.0, 1}, {9, -1.2, 0.0, 1}, {7, -0.3, 0.0, 0}}},
        {"pinch_right", 30, {{14, -0.9, 0.0, 1}, {15, -1.2, 0.0, 1}, {13, -0.3, 0.0, 0}}},
        {"nod", 25, {{2, -0.45, 0.0, 1}, {3, -0.55, 0.0, 1}}},
        {"shrug", 20, {{4, 0.35, 0.0, 0}, {10, 0.35, 0.0, 0}, {1, -0.15, 0.0, 0}}},
    };
    return table;
}

const Primitive& find_primitive(const std::string& name) {
    for (const auto& p : primitive_table()) {
        if (p.name == name) return p;
    }
    throw DataError("unknown motion primitive '" + name + "'");
}

std::vector<double> default_bone_lengths() {
    std::vector<double> len(16, 0.0);
    len[1] = 0.10;
    len[2] = 0.10;
    len[3] = 0.08;
    len[4] = 0.20;
    len[5] = 0.30;
    len[6] = 0.25;
    len[7] = 0.08;
    len[8] = 0.05;
    len[9] = 0.04;
    len[10] = 0.20;
    len[11] = 0.30;
    len[12] = 0.25;
    len[13] = 0.08;
    len[14] = 0.05;
    len[15] = 0.04;
    return len;
}

}  // namespace

std::vector<std::string> known_primitives() {
    std::vector<std::string> names;
    for (const auto& p : primitive_table()) names.push_back(p.name);
    return names;
}

SynthConfig SynthConfig::defaults() {
    SynthConfig c;
    c.vocabulary = known_primitives();
    c.num_sequences = 100;
    c.frame_jitter = 5;
    c.bone_lengths = default_bone_lengths();
    return c;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open generator config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("generator config parse error: " + std::string(e.what()));
    }
    SynthConfig c = defaults();
    if (j.contains("vocabulary")) c.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
    if (j.contains("num_sequences")) c.num_sequences = j["num_sequences"].get<std::size_t>();
    if (j.contains("frame_jitter")) c.frame_jitter = j["frame_jitter"].get<int>();
    if (j.contains("bone_lengths")) c.bone_lengths = j["bone_lengths"].get<std::vector<double>>();
    return c;
}

Dataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed) {
    if (config.vocabulary.empty()) throw DataError("generator vocabulary is empty");
    if (config.num_sequences == 0) throw DataError("zero sequences requested");
    for (const auto& name : config.vocabulary) find_primitive(name);

    Dataset ds;
    ds.skeleton = Skeleton::default_skeleton();
    std::vector<double> lengths =
        config.bone_lengths.empty() ? default_bone_lengths() : config.bone_lengths;
    if (lengths.size() != ds.skeleton.joint_count())
        throw DataError("bone_lengths size mismatch with skeleton");

    const auto rest = rest_angles();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> token_count_dist(1, 3);
    std::uniform_int_distribution<std::size_t> vocab_dist(0, config.vocabulary.size() - 1);
    std::uniform_int_distribution<int> jitter_dist(-config.frame_jitter, config.frame_jitter);

    for (std::size_t s = 0; s < config.num_sequences; ++s) {
        PoseSequence seq;
        char idbuf[16];
        std::snprintf(idbuf, sizeof idbuf, "seq_%04zu", s);
        seq.id = idbuf;

        int k = token_count_dist(rng);
        std::vector<const Primitive*> prims;
        int base_frames = 0;
        for (int i = 0; i < k; ++i) {
            const auto& name = config.vocabulary[vocab_dist(rng)];
            seq.tokens.push_back(name);
            prims.push_back(&find_primitive(name));
            base_frames += prims.back()->duration;
        }
        int jitter = config.frame_jitter > 0 ? jitter_dist(rng) : 0;
        int total = std::max(4, base_frames + jitter);

        // Segment boundaries in normalized time, proportional to durations.
        std::vector<double> bounds{0.0};
        for (const Primitive* p : prims)
            bounds.push_back(bounds.back() +
                             static_cast<double>(p->duration) / static_cast<double>(base_frames));
        bounds.back() = 1.0;

        for (int f = 0; f < total; ++f) {
            double u = total > 1 ? static_cast<double>(f) / static_cast<double>(total - 1) : 0.0;
            std::size_t seg = 0;
            while (seg + 1 < prims.size() && u >= bounds[seg + 1]) ++seg;
            double local = (u - bounds[seg]) / (bounds[seg + 1] - bounds[seg]);

            std::vector<Angles> ang = rest;
            for (const Effect& e : prims[seg]->effects) {
                double bump = std::sin(kPi * local);
                bump *= bump;
                double osc = e.cycles > 0 ? std::sin(2.0 * kPi * e.cycles * local) : 1.0;
                ang[e.joint].elev += e.elev_amp * bump * (e.cycles > 0 && e.elev_amp != 0.0 &&
                                                          e.azim_amp == 0.0
                                                              ? osc
                                                              : 1.0);
                ang[e.joint].azim += e.azim_amp * bump * osc;
            }

            LinkSet ls;
            ls.root_position = {0.0, 0.0, 0.0};
            ls.links.assign(ds.skeleton.joint_count(), Vec3{});
            for (std::size_t i = 0; i < ds.skeleton.joint_count(); ++i) {
                if (ds.skeleton.parents[i] < 0) continue;
                ls.links[i] = lengths[i] * direction(ang[i].elev, ang[i].azim);
            }
            seq.frames.push_back(reconstruct_pose(ls, ds.skeleton));
        }
        ds.sequences.push_back(std::move(seq));
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace signkit
