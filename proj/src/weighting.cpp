#include "signkit/weighting.hpp"

#include <fstream>

#include <json.hpp>

namespace signkit {

namespace {

std::vector<double> load_array(const std::filesystem::path& path, const char* key) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("parse error in " + path.string() + ": " + e.what());
    }
    if (!j.contains(key) || !j[key].is_array())
        throw DataError(path.string() + ": missing \"" + key + "\" array");
    return j[key].get<std::vector<double>>();
}

void save_array(const std::filesystem::path& path, const char* key,
                const std::vector<double>& values) {
    nlohmann::json j;
    j[key] = values;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << j.dump() << '\n';
}

}  // namespace

JointWeights JointWeights::uniform(std::size_t joints) { return {std::vector<double>(joints, 1.0)}; }
JointWeights JointWeights::load(const std::filesystem::path& path) {
    return {load_array(path, "w")};
}
void JointWeights::save(const std::filesystem::path& path) const { save_array(path, "w", w); }

BoneLambdas BoneLambdas::uniform(std::size_t joints) { return {std::vector<double>(joints, 1.0)}; }
BoneLambdas BoneLambdas::load(const std::filesystem::path& path) {
    return {load_array(path, "lambda")};
}
void BoneLambdas::save(const std::filesystem::path& path) const { save_array(path, "lambda", lambda); }

JointVariances joint_variances(const Dataset& dataset) {
    if (dataset.sequences.empty()) throw DataError("joint_variances: empty dataset");
    const Skeleton& sk = dataset.skeleton;
    const std::size_t n = sk.joint_count();

    // Two-pass population variance per coordinate, summed over x,y,z.
    std::vector<Vec3> mean(n, Vec3{});
    std::size_t frames = 0;
    auto sample = [&](const LinkSet& ls, std::size_t joint) {
        return sk.parents[joint] == -1 ? ls.root_position : ls.links[joint];
    };
    for (const auto& seq : dataset.sequences) {
        for (const auto& pose : seq.frames) {
            LinkSet ls = compute_links(pose, sk);
            for (std::size_t i = 0; i < n; ++i) mean[i] += sample(ls, i);
            ++frames;
        }
    }
    for (std::size_t i = 0; i < n; ++i) mean[i] = mean[i] * (1.0 / static_cast<double>(frames));

    JointVariances out;
    out.sigma_sq.assign(n, 0.0);
    for (const auto& seq : dataset.sequences) {
        for (const auto& pose : seq.frames) {
            LinkSet ls = compute_links(pose, sk);
            for (std::size_t i = 0; i < n; ++i) {
                Vec3 d = sample(ls, i) - mean[i];
                out.sigma_sq[i] += d.squared_norm();
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.sigma_sq[i] /= static_cast<double>(frames);
        // Static data never produces an exact 0 (the mean of identical
        // samples rounds by an ulp); snap accumulation noise so the
        // degenerate all-weights-1 convention can actually trigger.
        if (out.sigma_sq[i] < 1e-18) out.sigma_sq[i] = 0.0;
    }
    return out;
}

JointWeights parent_relative_weights(const JointVariances& variances) {
    double total = 0.0;
    for (double v : variances.sigma_sq) total += v;
    JointWeights out;
    out.w.reserve(variances.sigma_sq.size());
    if (total == 0.0) {
        // Static data: no variance signal, fall back to uniform full weight.
        out.w.assign(variances.sigma_sq.size(), 1.0);
        return out;
    }
    for (double v : variances.sigma_sq) out.w.push_back(1.0 - v / total);
    return out;
}

void require_alignment(const Dataset& pred, const Dataset& ref, bool same_frame_counts) {
    if (pred.sequences.size() != ref.sequences.size())
        throw DataError("misaligned datasets: " + std::to_string(pred.sequences.size()) + " vs " +
                        std::to_string(ref.sequences.size()) + " sequences");
    for (std::size_t s = 0; s < pred.sequences.size(); ++s) {
        if (pred.sequences[s].id != ref.sequences[s].id)
            throw DataError("misaligned datasets at index " + std::to_string(s) + ": id '" +
                            pred.sequences[s].id + "' vs '" + ref.sequences[s].id + "'");
        if (same_frame_counts && pred.sequences[s].frames.size() != ref.sequences[s].frames.size())
            throw DataError("frame-count mismatch in sequence '" + pred.sequences[s].id + "'");
    }
}

BoneLambdas bone_length_lambda(const Dataset& pred, const Dataset& ref) {
    require_alignment(pred, ref, /*same_frame_counts=*/true);
    const Skeleton& sk = ref.skeleton;
    const std::size_t n = sk.joint_count();
    BoneLambdas out;
    out.lambda.assign(n, 0.0);
    std::size_t samples = 0;
    for (std::size_t s = 0; s < ref.sequences.size(); ++s) {
        for (std::size_t t = 0; t < ref.sequences[s].frames.size(); ++t) {
            auto ref_len = bone_lengths(ref.sequences[s].frames[t], sk);
            auto pred_len = bone_lengths(pred.sequences[s].frames[t], sk);
            for (std::size_t i = 0; i < n; ++i) {
                if (sk.parents[i] < 0) continue;
                if (ref_len[i] < 1e-8)
                    throw DataError("near-zero reference bone " + std::to_string(i) +
                                    " in sequence '" + ref.sequences[s].id + "'");
                out.lambda[i] += std::abs(ref_len[i] - pred_len[i]) / ref_len[i];
            }
            ++samples;
        }
    }
    if (samples == 0) throw DataError("bone_length_lambda: no aligned frames");
    for (double& l : out.lambda) l /= static_cast<double>(samples);
    return out;
}

}  // namespace signkit
