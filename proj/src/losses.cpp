#include "signkit/losses.hpp"

#include <algorithm>
#include <cmath>

namespace signkit {

namespace {

void require_same_shape(const Frames& pred, const Frames& ref) {
    if (pred.size() != ref.size()) throw DataError("loss: frame-count mismatch");
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].size() != ref[t].size())
            throw DataError("loss: joint-count mismatch at frame " + std::to_string(t));
    }
}

Frames zero_like(const Frames& f) {
    Frames g(f.size());
    for (std::size_t t = 0; t < f.size(); ++t) g[t].assign(f[t].size(), Vec3{});
    return g;
}

}  // namespace

LossValue weighted_mse_loss(const Frames& pred, const Frames& ref, const JointWeights& weights) {
    require_same_shape(pred, ref);
    if (pred.empty()) throw DataError("loss: empty frames");
    if (weights.w.size() != pred[0].size()) throw DataError("loss: weight-count mismatch");
    const double inv_t = 1.0 / static_cast<double>(pred.size());
    LossValue out;
    out.grad = zero_like(pred);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        for (std::size_t i = 0; i < pred[t].size(); ++i) {
            Vec3 d = pred[t][i] - ref[t][i];
            out.value += weights.w[i] * d.squared_norm() * inv_t;
            out.grad[t][i] = d * (2.0 * weights.w[i] * inv_t);
        }
    }
    return out;
}

LossValue bone_length_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton,
                           const BoneLambdas& lambdas) {
    require_same_shape(pred, ref);
    if (pred.empty()) throw DataError("loss: empty frames");
    if (lambdas.lambda.size() != skeleton.joint_count())
        throw DataError("loss: lambda-count mismatch");
    const double inv_t = 1.0 / static_cast<double>(pred.size());
    LossValue out;
    out.grad = zero_like(pred);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        LinkSet ref_ls = compute_links(ref[t], skeleton);
        LinkSet pred_ls = compute_links(pred[t], skeleton);
        for (std::size_t i = 0; i < skeleton.joint_count(); ++i) {
            int parent = skeleton.parents[i];
            if (parent < 0) continue;
            double ref_len = ref_ls.links[i].norm();
            if (ref_len < 1e-8)
                throw DataError("degenerate reference bone " + std::to_string(i) + " at frame " +
                                std::to_string(t));
            double pred_len = pred_ls.links[i].norm();
            double diff = pred_len - ref_len;
            out.value += lambdas.lambda[i] * std::abs(diff) / ref_len * inv_t;
            if (diff == 0.0 || pred_len == 0.0) continue;  // zero subgradient at kinks
            double sign = diff > 0.0 ? 1.0 : -1.0;
            Vec3 g = pred_ls.links[i] * (lambdas.lambda[i] * sign * inv_t / (ref_len * pred_len));
            out.grad[t][i] += g;
            out.grad[t][parent] += g * -1.0;
        }
    }
    return out;
}

LossValue bone_pose_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton) {
    require_same_shape(pred, ref);
    if (pred.empty()) throw DataError("loss: empty frames");
    const double inv_t = 1.0 / static_cast<double>(pred.size());
    LossValue out;
    out.grad = zero_like(pred);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        LinkSet ref_ls = compute_links(ref[t], skeleton);
        LinkSet pred_ls = compute_links(pred[t], skeleton);
        for (std::size_t i = 0; i < skeleton.joint_count(); ++i) {
            int parent = skeleton.parents[i];
            if (parent < 0) continue;
            double ref_len = ref_ls.links[i].norm();
            if (ref_len < 1e-8)
                throw DataError("degenerate reference bone " + std::to_string(i) + " at frame " +
                                std::to_string(t));
            Vec3 d = pred_ls.links[i] - ref_ls.links[i];
            double dn = d.norm();
            out.value += dn / ref_len * inv_t;
            if (dn == 0.0) continue;  // zero subgradient where b^ == b
            Vec3 g = d * (inv_t / (ref_len * dn));
            out.grad[t][i] += g;
            out.grad[t][parent] += g * -1.0;
        }
    }
    return out;
}

EosLossValue eos_classification_loss(const std::vector<double>& p_eos,
                                     const std::vector<double>& target) {
    if (p_eos.size() != target.size()) throw DataError("eos loss: length mismatch");
    if (p_eos.empty()) throw DataError("eos loss: no steps");
    const double inv_n = 1.0 / static_cast<double>(p_eos.size());
    EosLossValue out;
    out.grad_logit.resize(p_eos.size());
    for (std::size_t i = 0; i < p_eos.size(); ++i) {
        double p = std::clamp(p_eos[i], 1e-7, 1.0 - 1e-7);
        out.value -= (target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p)) * inv_n;
        out.grad_logit[i] = (p_eos[i] - target[i]) * inv_n;
    }
    return out;
}

LossValue composite_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton,
                         const JointWeights& weights, const BoneLambdas& lambdas,
                         const LossCoefficients& coeffs) {
    LossValue out;
    out.grad = zero_like(pred);
    auto accumulate = [&](const LossValue& term, double coeff) {
        out.value += coeff * term.value;
        for (std::size_t t = 0; t < out.grad.size(); ++t)
            for (std::size_t i = 0; i < out.grad[t].size(); ++i)
                out.grad[t][i] += term.grad[t][i] * coeff;
    };
    if (coeffs.alpha != 0.0) accumulate(weighted_mse_loss(pred, ref, weights), coeffs.alpha);
    if (coeffs.beta != 0.0) accumulate(bone_length_loss(pred, ref, skeleton, lambdas), coeffs.beta);
    if (coeffs.gamma != 0.0) accumulate(bone_pose_loss(pred, ref, skeleton), coeffs.gamma);
    return out;
}

double gradient_check(const LossFn& loss, const Frames& pred, double step) {
    LossValue analytic = loss(pred);
    Frames probe = pred;
    double max_rel = 0.0;
    for (std::size_t t = 0; t < probe.size(); ++t) {
        for (std::size_t i = 0; i < probe[t].size(); ++i) {
            double* coords[3] = {&probe[t][i].x, &probe[t][i].y, &probe[t][i].z};
            const Vec3 a = analytic.grad[t][i];
            const double analytic_c[3] = {a.x, a.y, a.z};
            for (int c = 0; c < 3; ++c) {
                double saved = *coords[c];
                *coords[c] = saved + step;
                double plus = loss(probe).value;
                *coords[c] = saved - step;
                double minus = loss(probe).value;
                *coords[c] = saved;
                double numeric = (plus - minus) / (2.0 * step);
                double rel = std::abs(analytic_c[c] - numeric) / std::max(1.0, std::abs(numeric));
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    return max_rel;
}

}  // namespace signkit
