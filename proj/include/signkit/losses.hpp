#pragma once

#include <functional>

#include "signkit/skeleton.hpp"
#include "signkit/weighting.hpp"

namespace signkit {

// Scalar loss plus its gradient with respect to the predicted coordinates.
struct LossValue {
    double value = 0.0;
    Frames grad;  // same T x N shape as the prediction
};

struct LossCoefficients {
    double alpha = 1.0;       // reconstruction (weighted MSE)
    double beta = 1.0;        // bone-length loss
    double gamma = 1.0;       // bone-pose loss
    double eos_weight = 1.0;  // EOS / counter head loss, applied by the trainer
};

// (1/T) sum_t sum_i w_i ||ref - pred||^2.
LossValue weighted_mse_loss(const Frames& pred, const Frames& ref, const JointWeights& weights);

// (1/T) sum_t sum_i lambda_i | ||b_i|| - ||b^_i|| | / ||b_i||. Zero subgradient
// at the kink and at zero-length predicted bones.
LossValue bone_length_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton,
                           const BoneLambdas& lambdas);

// (1/T) sum_t sum_i ||b_i - b^_i|| / ||b_i||.
LossValue bone_pose_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton);

// Mean binary cross-entropy over steps; grad is with respect to the
// pre-sigmoid logits, (p - target) / steps.
struct EosLossValue {
    double value = 0.0;
    std::vector<double> grad_logit;
};
EosLossValue eos_classification_loss(const std::vector<double>& p_eos,
                                     const std::vector<double>& target);

// alpha * MSE + beta * bone-length + gamma * bone-pose; eos_weight is not
// consumed here (the trainer owns the EOS head loss).
LossValue composite_loss(const Frames& pred, const Frames& ref, const Skeleton& skeleton,
                         const JointWeights& weights, const BoneLambdas& lambdas,
                         const LossCoefficients& coeffs);

// Central finite differences against the analytic gradient; returns the max
// over coordinates of |analytic - numeric| / max(1, |numeric|).
using LossFn = std::function<LossValue(const Frames&)>;
double gradient_check(const LossFn& loss, const Frames& pred, double step = 1e-6);

}  // namespace signkit
