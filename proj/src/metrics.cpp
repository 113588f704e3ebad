#include "signkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "signkit/weighting.hpp"

namespace signkit {

namespace {

int group_index(const std::string& name) {
    for (std::size_t g = 0; g < kGroupNames.size(); ++g) {
        if (name == kGroupNames[g]) return static_cast<int>(g);
    }
    return -1;
}

// Group index per joint, -1 for the root / unlabeled joints.
std::vector<int> joint_groups(const Skeleton& sk) {
    std::vector<int> gi(sk.joint_count(), -1);
    for (const auto& [name, members] : sk.groups) {
        int g = group_index(name);
        for (int m : members) gi[m] = g;
    }
    return gi;
}

// Per-joint deviation values -> group report (count-weighted overall).
GroupReport to_group_report(const std::vector<double>& joint_values,
                            const std::vector<bool>& joint_valid, const Skeleton& sk) {
    GroupReport rep;
    auto gi = joint_groups(sk);
    std::array<double, 6> sums{};
    for (std::size_t i = 0; i < joint_values.size(); ++i) {
        if (gi[i] < 0 || !joint_valid[i]) continue;
        sums[gi[i]] += joint_values[i];
        ++rep.group_counts[gi[i]];
    }
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t g = 0; g < 6; ++g) {
        rep.group_values[g] = rep.group_counts[g] ? sums[g] / rep.group_counts[g] : 0.0;
        total += sums[g];
        count += rep.group_counts[g];
    }
    rep.overall = count ? total / count : 0.0;
    return rep;
}

}  // namespace

GroupReport bone_length_deviation(const Dataset& pred, const Dataset& ref) {
    require_alignment(pred, ref, /*same_frame_counts=*/false);
    const Skeleton& sk = ref.skeleton;
    const std::size_t n = sk.joint_count();
    std::vector<double> joint_dev(n, 0.0);
    std::vector<bool> valid(n, false);
    if (pred.sequences.empty()) return to_group_report(joint_dev, valid, sk);

    std::vector<double> acc(n, 0.0);
    for (std::size_t s = 0; s < pred.sequences.size(); ++s) {
        const auto& ps = pred.sequences[s];
        const auto& rs = ref.sequences[s];
        bool frame_aligned = ps.frames.size() == rs.frames.size();

        std::vector<double> ref_mean(n, 0.0);
        if (!frame_aligned) {
            for (const auto& frame : rs.frames) {
                auto len = bone_lengths(frame, sk);
                for (std::size_t i = 0; i < n; ++i) ref_mean[i] += len[i];
            }
            for (double& v : ref_mean) v /= static_cast<double>(rs.frames.size());
        }

        std::vector<double> seq_dev(n, 0.0);
        for (std::size_t t = 0; t < ps.frames.size(); ++t) {
            auto pred_len = bone_lengths(ps.frames[t], sk);
            auto ref_len = frame_aligned ? bone_lengths(rs.frames[t], sk) : ref_mean;
            for (std::size_t i = 0; i < n; ++i) {
                if (sk.parents[i] < 0) continue;
                if (ref_len[i] < 1e-8)
                    throw DataError("degenerate reference bone " + std::to_string(i) +
                                    " in sequence '" + rs.id + "'");
                seq_dev[i] += std::abs(pred_len[i] - ref_len[i]) / ref_len[i];
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            acc[i] += seq_dev[i] / static_cast<double>(ps.frames.size());
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sk.parents[i] < 0) continue;
        joint_dev[i] = acc[i] / static_cast<double>(pred.sequences.size()) * 100.0;
        valid[i] = true;
    }
    return to_group_report(joint_dev, valid, sk);
}

std::vector<double> movement_variance(const PoseSequence& seq, const Skeleton& skeleton,
                                      StatMode mode) {
    const std::size_t n = skeleton.joint_count();
    const std::size_t frames = seq.frames.size();
    auto sample = [&](const Pose& pose, std::size_t joint) -> Vec3 {
        if (mode == StatMode::global || skeleton.parents[joint] < 0) return pose[joint];
        return pose[joint] - pose[skeleton.parents[joint]];
    };
    std::vector<Vec3> mean(n, Vec3{});
    for (const auto& pose : seq.frames)
        for (std::size_t i = 0; i < n; ++i) mean[i] += sample(pose, i);
    for (auto& m : mean) m = m * (1.0 / static_cast<double>(frames));
    std::vector<double> var(n, 0.0);
    for (const auto& pose : seq.frames)
        for (std::size_t i = 0; i < n; ++i) var[i] += (sample(pose, i) - mean[i]).squared_norm();
    for (double& v : var) v /= static_cast<double>(frames);
    return var;
}

std::vector<double> movement_velocity(const PoseSequence& seq, const Skeleton& skeleton,
                                      StatMode mode) {
    const std::size_t frames = seq.frames.size();
    if (frames < 2)
        throw DataError("velocity undefined for single-frame sequence '" + seq.id + "'");
    const std::size_t n = skeleton.joint_count();
    auto sample = [&](const Pose& pose, std::size_t joint) -> Vec3 {
        if (mode == StatMode::global || skeleton.parents[joint] < 0) return pose[joint];
        return pose[joint] - pose[skeleton.parents[joint]];
    };
    std::vector<double> vel(n, 0.0);
    for (std::size_t t = 0; t + 1 < frames; ++t)
        for (std::size_t i = 0; i < n; ++i)
            vel[i] += (sample(seq.frames[t + 1], i) - sample(seq.frames[t], i)).norm();
    for (double& v : vel) v /= static_cast<double>(frames - 1);
    return vel;
}

GroupReport movement_deviation(const Dataset& pred, const Dataset& ref, StatKind kind,
                               StatMode mode) {
    require_alignment(pred, ref, /*same_frame_counts=*/false);
    const Skeleton& sk = ref.skeleton;
    const std::size_t n = sk.joint_count();
    std::vector<double> acc(n, 0.0);
    std::vector<std::size_t> samples(n, 0);
    std::size_t excluded = 0;
    for (std::size_t s = 0; s < pred.sequences.size(); ++s) {
        // Velocity is undefined for single-frame sequences; skip those pairs.
        if (kind == StatKind::velocity &&
            (pred.sequences[s].frames.size() < 2 || ref.sequences[s].frames.size() < 2))
            continue;
        auto stat = [&](const PoseSequence& q) {
            return kind == StatKind::variance ? movement_variance(q, sk, mode)
                                              : movement_velocity(q, sk, mode);
        };
        auto pred_stat = stat(pred.sequences[s]);
        auto ref_stat = stat(ref.sequences[s]);
        for (std::size_t i = 0; i < n; ++i) {
            if (ref_stat[i] < 1e-12) {
                ++excluded;
                continue;
            }
            acc[i] += std::abs(pred_stat[i] - ref_stat[i]) / ref_stat[i] * 100.0;
            ++samples[i];
        }
    }
    std::vector<double> joint_dev(n, 0.0);
    std::vector<bool> valid(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (samples[i] == 0) continue;
        joint_dev[i] = acc[i] / static_cast<double>(samples[i]);
        valid[i] = true;
    }
    GroupReport rep = to_group_report(joint_dev, valid, sk);
    rep.excluded = excluded;
    return rep;
}

FrameLengthStats frame_length_stats(const Dataset& pred, const Dataset& ref) {
    require_alignment(pred, ref, /*same_frame_counts=*/false);
    FrameLengthStats out;
    if (pred.sequences.empty()) return out;
    std::vector<double> pred_len, ref_len;
    for (std::size_t s = 0; s < pred.sequences.size(); ++s) {
        double tp = static_cast<double>(pred.sequences[s].frames.size());
        double tr = static_cast<double>(ref.sequences[s].frames.size());
        pred_len.push_back(tp);
        ref_len.push_back(tr);
        double signed_diff = (tp - tr) / tr * 100.0;
        out.mean_signed_rel_diff += signed_diff;
        out.mean_abs_rel_diff += std::abs(signed_diff);
    }
    out.mean_signed_rel_diff /= static_cast<double>(pred_len.size());
    out.mean_abs_rel_diff /= static_cast<double>(pred_len.size());

    double lo = *std::min_element(ref_len.begin(), ref_len.end());
    double hi = *std::max_element(ref_len.begin(), ref_len.end());
    lo = std::min(lo, *std::min_element(pred_len.begin(), pred_len.end()));
    hi = std::max(hi, *std::max_element(pred_len.begin(), pred_len.end()));
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const int bins = 20;
    for (int b = 0; b <= bins; ++b)
        out.bin_edges.push_back(lo + (hi - lo) * static_cast<double>(b) / bins);
    out.pred_counts.assign(bins, 0);
    out.ref_counts.assign(bins, 0);
    auto bin_of = [&](double v) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    for (double v : pred_len) ++out.pred_counts[bin_of(v)];
    for (double v : ref_len) ++out.ref_counts[bin_of(v)];
    return out;
}

MetricsBundle evaluate_all(const Dataset& pred, const Dataset& ref) {
    MetricsBundle b;
    b.bone_length = bone_length_deviation(pred, ref);
    b.variance_global = movement_deviation(pred, ref, StatKind::variance, StatMode::global);
    b.variance_local = movement_deviation(pred, ref, StatKind::variance, StatMode::local);
    b.velocity_global = movement_deviation(pred, ref, StatKind::velocity, StatMode::global);
    b.velocity_local = movement_deviation(pred, ref, StatKind::velocity, StatMode::local);
    b.frame_length = frame_length_stats(pred, ref);
    return b;
}

// ---------------------------------------------------------------------------
// Report emission (CSV + static SVG)

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12f", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report file: " + path.string());
    out << content;
}

std::string group_csv(const GroupReport& rep, bool with_excluded) {
    std::string csv = "label,deviation_pct\n";
    for (std::size_t g = 0; g < 6; ++g)
        csv += std::string(kGroupNames[g]) + "," + fmt(rep.group_values[g]) + "\n";
    csv += "overall," + fmt(rep.overall) + "\n";
    if (with_excluded) csv += "excluded_joints," + std::to_string(rep.excluded) + "\n";
    return csv;
}

std::string svg_header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" "
           "viewBox=\"0 0 640 360\">\n<rect width=\"640\" height=\"360\" fill=\"white\"/>\n"
           "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" +
           title + "</text>\n";
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
    std::string svg = svg_header(title);
    const double left = 60, bottom = 320, top = 50, width = 560;
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    svg += "<line x1=\"60\" y1=\"320\" x2=\"620\" y2=\"320\" stroke=\"black\"/>\n";
    svg += "<line x1=\"60\" y1=\"50\" x2=\"60\" y2=\"320\" stroke=\"black\"/>\n";
    if (!labels.empty()) {
        double slot = width / static_cast<double>(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            double h = (bottom - top) * values[i] / vmax;
            double x = left + slot * static_cast<double>(i) + slot * 0.15;
            double w = slot * 0.7;
            svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(bottom - h) + "\" width=\"" + fmt(w) +
                   "\" height=\"" + fmt(h) + "\" fill=\"#4878b0\"/>\n";
            svg += "<text x=\"" + fmt(x + w / 2) +
                   "\" y=\"336\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                   "font-size=\"11\">" +
                   labels[i] + "</text>\n";
            svg += "<text x=\"" + fmt(x + w / 2) + "\" y=\"" + fmt(bottom - h - 4) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
                   fmt(values[i]).substr(0, 6) + "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

std::string group_svg(const std::string& title, const GroupReport& rep, bool empty) {
    if (empty) return svg_header(title) + "</svg>\n";
    std::vector<std::string> labels(kGroupNames.begin(), kGroupNames.end());
    std::vector<double> values(rep.group_values.begin(), rep.group_values.end());
    labels.push_back("overall");
    values.push_back(rep.overall);
    return bar_chart_svg(title, labels, values);
}

std::string frame_length_svg(const FrameLengthStats& st) {
    std::string svg = svg_header("Frame length distribution (pred vs ref)");
    if (st.bin_edges.empty()) return svg + "</svg>\n";
    const double left = 60, bottom = 320, top = 50, width = 560;
    std::size_t maxc = 1;
    for (std::size_t b = 0; b < st.pred_counts.size(); ++b)
        maxc = std::max({maxc, st.pred_counts[b], st.ref_counts[b]});
    svg += "<line x1=\"60\" y1=\"320\" x2=\"620\" y2=\"320\" stroke=\"black\"/>\n";
    double slot = width / static_cast<double>(st.pred_counts.size());
    for (std::size_t b = 0; b < st.pred_counts.size(); ++b) {
        double x = left + slot * static_cast<double>(b);
        double hr = (bottom - top) * static_cast<double>(st.ref_counts[b]) / maxc;
        double hp = (bottom - top) * static_cast<double>(st.pred_counts[b]) / maxc;
        svg += "<rect x=\"" + fmt(x + slot * 0.1) + "\" y=\"" + fmt(bottom - hr) + "\" width=\"" +
               fmt(slot * 0.35) + "\" height=\"" + fmt(hr) + "\" fill=\"#888888\"/>\n";
        svg += "<rect x=\"" + fmt(x + slot * 0.5) + "\" y=\"" + fmt(bottom - hp) + "\" width=\"" +
               fmt(slot * 0.35) + "\" height=\"" + fmt(hp) + "\" fill=\"#4878b0\"/>\n";
    }
    svg += "<rect x=\"480\" y=\"40\" width=\"12\" height=\"12\" fill=\"#888888\"/>"
           "<text x=\"496\" y=\"50\" font-family=\"sans-serif\" font-size=\"11\">reference</text>\n";
    svg += "<rect x=\"560\" y=\"40\" width=\"12\" height=\"12\" fill=\"#4878b0\"/>"
           "<text x=\"576\" y=\"50\" font-family=\"sans-serif\" font-size=\"11\">predicted</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace

void emit_report(const MetricsBundle& bundle, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    bool empty = bundle.frame_length.bin_edges.empty();

    struct Entry {
        const char* name;
        const GroupReport* rep;
        bool with_excluded;
        const char* title;
    };
    const Entry entries[] = {
        {"bone_length", &bundle.bone_length, false, "Bone length deviation (%)"},
        {"variance_global", &bundle.variance_global, true, "Global movement variance deviation (%)"},
        {"variance_local", &bundle.variance_local, true, "Local movement variance deviation (%)"},
        {"velocity_global", &bundle.velocity_global, true, "Global movement velocity deviation (%)"},
        {"velocity_local", &bundle.velocity_local, true, "Local movement velocity deviation (%)"},
    };
    for (const auto& e : entries) {
        std::string csv = empty ? std::string("label,deviation_pct\n") : group_csv(*e.rep, e.with_excluded);
        write_file(out_dir / (std::string(e.name) + ".csv"), csv);
        write_file(out_dir / (std::string(e.name) + ".svg"), group_svg(e.title, *e.rep, empty));
    }

    std::string flcsv = "label,value\n";
    if (!empty) {
        flcsv += "mean_signed_rel_diff_pct," + fmt(bundle.frame_length.mean_signed_rel_diff) + "\n";
        flcsv += "mean_abs_rel_diff_pct," + fmt(bundle.frame_length.mean_abs_rel_diff) + "\n";
        for (std::size_t b = 0; b < bundle.frame_length.pred_counts.size(); ++b) {
            char label[16];
            std::snprintf(label, sizeof label, "bin_%02zu", b);
            flcsv += std::string(label) + "," + fmt(bundle.frame_length.bin_edges[b]) + "," +
                     fmt(bundle.frame_length.bin_edges[b + 1]) + "," +
                     std::to_string(bundle.frame_length.pred_counts[b]) + "," +
                     std::to_string(bundle.frame_length.ref_counts[b]) + "\n";
        }
    }
    write_file(out_dir / "frame_length.csv", flcsv);
    write_file(out_dir / "frame_length.svg", frame_length_svg(bundle.frame_length));
}

}  // namespace signkit
