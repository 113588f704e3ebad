#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "signkit/losses.hpp"
#include "signkit/posedata.hpp"
#include "signkit/termination.hpp"

namespace signkit {

// Mean-pool text encoder plus a two-layer tanh decoder producing the next
// pose, an EOS logit and a progress counter from [context; previous pose;
// normalized time].
struct ToyModel {
    std::vector<std::string> vocab;
    int emb_dim = 0;     // d
    int hidden_dim = 0;  // h
    int joints = 0;      // N
    int max_frames = 512;
    std::vector<double> params;  // flat parameter vector, layout below

    int pose_dim() const { return joints * 3; }
    int input_dim() const { return emb_dim + pose_dim() + 1; }
    std::size_t param_count() const;

    // Offsets into params.
    std::size_t off_emb() const { return 0; }
    std::size_t off_w1() const { return vocab.size() * emb_dim; }
    std::size_t off_b1() const { return off_w1() + static_cast<std::size_t>(hidden_dim) * input_dim(); }
    std::size_t off_wp() const { return off_b1() + hidden_dim; }
    std::size_t off_bp() const { return off_wp() + static_cast<std::size_t>(pose_dim()) * hidden_dim; }
    std::size_t off_weos() const { return off_bp() + pose_dim(); }
    std::size_t off_beos() const { return off_weos() + hidden_dim; }
    std::size_t off_wc() const { return off_beos() + 1; }
    std::size_t off_bc() const { return off_wc() + hidden_dim; }

    int token_index(const std::string& token) const;

    void save(const std::filesystem::path& path) const;
    static ToyModel load(const std::filesystem::path& path);
};

struct TrainConfig {
    std::uint64_t seed = 0;
    double learning_rate = 1e-3;
    int epochs = 10;
    LossCoefficients coeffs;
    double noise_stddev = 0.0;
    TerminationConfig termination;
    int emb_dim = 16;
    int hidden_dim = 64;

    static TrainConfig load(const std::filesystem::path& path);
};

ToyModel init_model(const TrainConfig& config, const std::vector<std::string>& vocab, int joints);

struct StepOutput {
    Pose pose;
    std::vector<double> hidden;
    double eos_logit = 0.0;
    double eos_probability = 0.0;
    double counter = 0.0;
};

StepOutput forward_step(const ToyModel& model, const std::vector<std::string>& tokens,
                        const Pose& prev_pose, int t);

struct SequenceLoss {
    double total = 0.0;
    double mse = 0.0;
    double bone = 0.0;
    double pose = 0.0;
    double eos = 0.0;  // EOS BCE or counter regression, per termination mode
};

// Teacher-forced loss and parameter gradient for one sequence. grad, when
// non-null, must be zero-filled with param_count() entries; gradients are
// accumulated into it. noisy_prev carries the decoder inputs (same shape as
// seq.frames, entry t is the input fed when predicting frame t).
SequenceLoss sequence_gradients(const ToyModel& model, const PoseSequence& seq,
                                const Skeleton& skeleton, const Frames& noisy_prev,
                                const JointWeights& weights, const BoneLambdas& lambdas,
                                const TrainConfig& config, std::vector<double>* grad);

// Decoder inputs for teacher forcing: zero pose for the first step, then the
// previous ground-truth frame with optional Gaussian noise.
Frames teacher_inputs(const PoseSequence& seq, double noise_stddev, std::mt19937_64& rng);

struct EpochStats {
    int epoch = 0;
    SequenceLoss mean;
};

struct TrainResult {
    ToyModel model;
    std::vector<EpochStats> log;
};

TrainResult train(const ToyModel& model, const Dataset& dataset, const JointWeights& weights,
                  const BoneLambdas& lambdas, const TrainConfig& config);

void save_train_log(const std::vector<EpochStats>& log, const std::filesystem::path& path);

PoseSequence generate(const ToyModel& model, const std::vector<std::string>& tokens,
                      const TerminationConfig& termination, const std::string& id = "generated");

}  // namespace signkit
