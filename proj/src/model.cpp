#include "signkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace signkit {

std::size_t ToyModel::param_count() const { return off_bc() + 1; }

int ToyModel::token_index(const std::string& token) const {
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (vocab[i] == token) return static_cast<int>(i);
    }
    throw DataError("unknown token '" + token + "'");
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open train config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("train config parse error: " + std::string(e.what()));
    }
    TrainConfig c;
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("alpha")) c.coeffs.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.coeffs.beta = j["beta"].get<double>();
    if (j.contains("gamma")) c.coeffs.gamma = j["gamma"].get<double>();
    if (j.contains("eos_weight")) c.coeffs.eos_weight = j["eos_weight"].get<double>();
    if (j.contains("noise_stddev")) c.noise_stddev = j["noise_stddev"].get<double>();
    if (j.contains("emb_dim")) c.emb_dim = j["emb_dim"].get<int>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("mode")) {
        std::string m = j["mode"].get<std::string>();
        if (m == "eos")
            c.termination.mode = TerminationMode::eos;
        else if (m == "counter")
            c.termination.mode = TerminationMode::counter;
        else
            throw DataError("train config: unknown termination mode '" + m + "'");
    }
    if (j.contains("tau")) c.termination.tau = j["tau"].get<double>();
    if (j.contains("max_frames")) c.termination.max_frames = j["max_frames"].get<int>();
    if (j.contains("eos_polarity")) {
        std::string p = j["eos_polarity"].get<std::string>();
        if (p == "continue")
            c.termination.polarity = EosPolarity::continue_generation;
        else if (p == "end")
            c.termination.polarity = EosPolarity::end;
        else
            throw DataError("train config: unknown eos_polarity '" + p + "'");
    }
    c.termination.validate();
    return c;
}

ToyModel init_model(const TrainConfig& config, const std::vector<std::string>& vocab, int joints) {
    if (config.emb_dim <= 0 || config.hidden_dim <= 0)
        throw DataError("init_model: dimensions must be positive");
    if (joints <= 0) throw DataError("init_model: joint count must be positive");
    if (vocab.empty()) throw DataError("init_model: empty vocabulary");
    if (config.epochs < 1) throw DataError("init_model: epochs must be >= 1");
    ToyModel m;
    m.vocab = vocab;
    m.emb_dim = config.emb_dim;
    m.hidden_dim = config.hidden_dim;
    m.joints = joints;
    m.max_frames = config.termination.max_frames;
    m.params.resize(m.param_count());
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& p : m.params) p = dist(rng);
    return m;
}

namespace {

// Mean-pooled token embeddings.
std::vector<double> encode_context(const ToyModel& m, const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw DataError("forward: empty token sequence");
    std::vector<double> ctx(m.emb_dim, 0.0);
    for (const auto& tok : tokens) {
        int idx = m.token_index(tok);
        const double* e = &m.params[m.off_emb() + static_cast<std::size_t>(idx) * m.emb_dim];
        for (int k = 0; k < m.emb_dim; ++k) ctx[k] += e[k];
    }
    for (double& c : ctx) c /= static_cast<double>(tokens.size());
    return ctx;
}

std::vector<double> build_input(const ToyModel& m, const std::vector<double>& ctx,
                                const Pose& prev_pose, int t) {
    if (static_cast<int>(prev_pose.size()) != m.joints)
        throw DataError("forward: previous pose joint count mismatch");
    std::vector<double> x;
    x.reserve(m.input_dim());
    x.insert(x.end(), ctx.begin(), ctx.end());
    for (const Vec3& p : prev_pose) {
        x.push_back(p.x);
        x.push_back(p.y);
        x.push_back(p.z);
    }
    x.push_back(static_cast<double>(t) / static_cast<double>(m.max_frames));
    return x;
}

struct StepTrace {
    std::vector<double> input;
    std::vector<double> hidden;
    Pose pose;
    double eos_logit = 0.0;
    double counter = 0.0;
};

StepTrace run_step(const ToyModel& m, const std::vector<double>& x) {
    StepTrace tr;
    tr.input = x;
    const int in = m.input_dim();
    const int h = m.hidden_dim;
    const int pd = m.pose_dim();
    tr.hidden.resize(h);
    const double* w1 = &m.params[m.off_w1()];
    const double* b1 = &m.params[m.off_b1()];
    for (int r = 0; r < h; ++r) {
        double acc = b1[r];
        const double* row = w1 + static_cast<std::size_t>(r) * in;
        for (int c = 0; c < in; ++c) acc += row[c] * x[c];
        tr.hidden[r] = std::tanh(acc);
    }
    const double* wp = &m.params[m.off_wp()];
    const double* bp = &m.params[m.off_bp()];
    std::vector<double> pose_flat(pd);
    for (int r = 0; r < pd; ++r) {
        double acc = bp[r];
        const double* row = wp + static_cast<std::size_t>(r) * h;
        for (int c = 0; c < h; ++c) acc += row[c] * tr.hidden[c];
        pose_flat[r] = acc;
    }
    tr.pose.resize(m.joints);
    for (int j = 0; j < m.joints; ++j)
        tr.pose[j] = {pose_flat[j * 3], pose_flat[j * 3 + 1], pose_flat[j * 3 + 2]};
    const double* weos = &m.params[m.off_weos()];
    tr.eos_logit = m.params[m.off_beos()];
    for (int c = 0; c < h; ++c) tr.eos_logit += weos[c] * tr.hidden[c];
    const double* wc = &m.params[m.off_wc()];
    tr.counter = m.params[m.off_bc()];
    for (int c = 0; c < h; ++c) tr.counter += wc[c] * tr.hidden[c];
    return tr;
}

// Backward pass for one step; accumulates parameter gradients and returns
// nothing for the input path (teacher-forced inputs carry no gradient except
// the context slice, accumulated into dctx).
void backward_step(const ToyModel& m, const StepTrace& tr, const std::vector<double>& dpose_flat,
                   double dlogit, double dcounter, std::vector<double>& grad,
                   std::vector<double>& dctx) {
    const int in = m.input_dim();
    const int h = m.hidden_dim;
    const int pd = m.pose_dim();
    std::vector<double> dhid(h, 0.0);

    const double* wp = &m.params[m.off_wp()];
    double* gwp = &grad[m.off_wp()];
    double* gbp = &grad[m.off_bp()];
    for (int r = 0; r < pd; ++r) {
        double g = dpose_flat[r];
        if (g == 0.0) continue;
        const double* row = wp + static_cast<std::size_t>(r) * h;
        double* grow = gwp + static_cast<std::size_t>(r) * h;
        for (int c = 0; c < h; ++c) {
            grow[c] += g * tr.hidden[c];
            dhid[c] += g * row[c];
        }
        gbp[r] += g;
    }
    const double* weos = &m.params[m.off_weos()];
    double* gweos = &grad[m.off_weos()];
    const double* wc = &m.params[m.off_wc()];
    double* gwc = &grad[m.off_wc()];
    for (int c = 0; c < h; ++c) {
        gweos[c] += dlogit * tr.hidden[c];
        gwc[c] += dcounter * tr.hidden[c];
        dhid[c] += dlogit * weos[c] + dcounter * wc[c];
    }
    grad[m.off_beos()] += dlogit;
    grad[m.off_bc()] += dcounter;

    const double* w1 = &m.params[m.off_w1()];
    double* gw1 = &grad[m.off_w1()];
    double* gb1 = &grad[m.off_b1()];
    for (int r = 0; r < h; ++r) {
        double dpre = dhid[r] * (1.0 - tr.hidden[r] * tr.hidden[r]);
        if (dpre == 0.0) continue;
        const double* row = w1 + static_cast<std::size_t>(r) * in;
        double* grow = gw1 + static_cast<std::size_t>(r) * in;
        for (int c = 0; c < in; ++c) grow[c] += dpre * tr.input[c];
        for (int c = 0; c < m.emb_dim; ++c) dctx[c] += dpre * row[c];
        gb1[r] += dpre;
    }
}

}  // namespace

StepOutput forward_step(const ToyModel& model, const std::vector<std::string>& tokens,
                        const Pose& prev_pose, int t) {
    if (t < 1) throw DataError("forward_step: frame index must be >= 1");
    auto ctx = encode_context(model, tokens);
    StepTrace tr = run_step(model, build_input(model, ctx, prev_pose, t));
    StepOutput out;
    out.pose = std::move(tr.pose);
    out.hidden = std::move(tr.hidden);
    out.eos_logit = tr.eos_logit;
    out.eos_probability = sigmoid(tr.eos_logit);
    out.counter = tr.counter;
    return out;
}

Frames teacher_inputs(const PoseSequence& seq, double noise_stddev, std::mt19937_64& rng) {
    Frames inputs;
    inputs.reserve(seq.frames.size());
    Pose zero(seq.frames[0].size(), Vec3{});
    inputs.push_back(zero);
    for (std::size_t t = 1; t < seq.frames.size(); ++t)
        inputs.push_back(add_gaussian_noise(seq.frames[t - 1], noise_stddev, rng));
    return inputs;
}

SequenceLoss sequence_gradients(const ToyModel& model, const PoseSequence& seq,
                                const Skeleton& skeleton, const Frames& noisy_prev,
                                const JointWeights& weights, const BoneLambdas& lambdas,
                                const TrainConfig& config, std::vector<double>* grad) {
    const std::size_t frames = seq.frames.size();
    if (frames == 0) throw DataError("sequence '" + seq.id + "' has no frames");
    if (noisy_prev.size() != frames) throw DataError("teacher inputs shape mismatch");

    auto ctx = encode_context(model, seq.tokens);
    std::vector<StepTrace> traces;
    traces.reserve(frames);
    Frames pred(frames);
    std::vector<double> eos_prob(frames), counters(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        traces.push_back(
            run_step(model, build_input(model, ctx, noisy_prev[t], static_cast<int>(t) + 1)));
        pred[t] = traces.back().pose;
        eos_prob[t] = sigmoid(traces.back().eos_logit);
        counters[t] = traces.back().counter;
    }

    const LossCoefficients& cf = config.coeffs;
    SequenceLoss out;
    Frames dpose;  // accumulated d(total)/d(pred)
    {
        Frames zero(frames);
        for (std::size_t t = 0; t < frames; ++t) zero[t].assign(pred[t].size(), Vec3{});
        dpose = std::move(zero);
    }
    auto accumulate = [&](const LossValue& term, double coeff) {
        for (std::size_t t = 0; t < frames; ++t)
            for (std::size_t i = 0; i < pred[t].size(); ++i) dpose[t][i] += term.grad[t][i] * coeff;
    };
    if (cf.alpha != 0.0) {
        LossValue mse = weighted_mse_loss(pred, seq.frames, weights);
        out.mse = mse.value;
        accumulate(mse, cf.alpha);
    }
    if (cf.beta != 0.0) {
        LossValue bone = bone_length_loss(pred, seq.frames, skeleton, lambdas);
        out.bone = bone.value;
        accumulate(bone, cf.beta);
    }
    if (cf.gamma != 0.0) {
        LossValue pose_loss = bone_pose_loss(pred, seq.frames, skeleton);
        out.pose = pose_loss.value;
        accumulate(pose_loss, cf.gamma);
    }

    // Termination head supervision.
    std::vector<double> dlogit(frames, 0.0), dcounter(frames, 0.0);
    if (cf.eos_weight != 0.0) {
        if (config.termination.mode == TerminationMode::eos) {
            std::vector<double> target(frames, 1.0);
            target.back() = 0.0;  // continue for every frame but the last
            if (config.termination.polarity == EosPolarity::end)
                for (double& y : target) y = 1.0 - y;
            // Class-balanced BCE: the single stop frame carries the same total
            // weight as all continue frames combined, otherwise the stop
            // signal vanishes as 1/T and the head never learns to terminate.
            double w_cont = frames > 1 ? 0.5 / static_cast<double>(frames - 1) : 0.5;
            for (std::size_t t = 0; t < frames; ++t) {
                double w = (t + 1 == frames) ? 0.5 : w_cont;
                double p = std::clamp(eos_prob[t], 1e-7, 1.0 - 1e-7);
                out.eos -= w * (target[t] * std::log(p) + (1.0 - target[t]) * std::log(1.0 - p));
                dlogit[t] = w * (eos_prob[t] - target[t]) * cf.eos_weight;
            }
        } else {
            // Counter regression toward t/T.
            double inv = 1.0 / static_cast<double>(frames);
            for (std::size_t t = 0; t < frames; ++t) {
                double target = static_cast<double>(t + 1) * inv;
                double d = counters[t] - target;
                out.eos += d * d * inv;
                dcounter[t] = 2.0 * d * inv * cf.eos_weight;
            }
        }
    }

    out.total = cf.alpha * out.mse + cf.beta * out.bone + cf.gamma * out.pose +
                cf.eos_weight * out.eos;
    if (!std::isfinite(out.total))
        throw DataError("non-finite loss while processing sequence '" + seq.id + "'");

    if (grad) {
        if (grad->size() != model.param_count())
            throw DataError("gradient buffer size mismatch");
        std::vector<double> dctx(model.emb_dim, 0.0);
        std::vector<double> dpose_flat(model.pose_dim());
        for (std::size_t t = 0; t < frames; ++t) {
            for (int j = 0; j < model.joints; ++j) {
                dpose_flat[j * 3] = dpose[t][j].x;
                dpose_flat[j * 3 + 1] = dpose[t][j].y;
                dpose_flat[j * 3 + 2] = dpose[t][j].z;
            }
            backward_step(model, traces[t], dpose_flat, dlogit[t], dcounter[t], *grad, dctx);
        }
        // Mean pool: each token embedding receives dctx / k.
        double inv_k = 1.0 / static_cast<double>(seq.tokens.size());
        for (const auto& tok : seq.tokens) {
            int idx = model.token_index(tok);
            double* ge = &(*grad)[model.off_emb() + static_cast<std::size_t>(idx) * model.emb_dim];
            for (int k = 0; k < model.emb_dim; ++k) ge[k] += dctx[k] * inv_k;
        }
    }
    return out;
}

TrainResult train(const ToyModel& model, const Dataset& dataset, const JointWeights& weights,
                  const BoneLambdas& lambdas, const TrainConfig& config) {
    if (dataset.sequences.empty()) throw DataError("train: empty dataset");
    TrainResult result;
    result.model = model;
    ToyModel& m = result.model;

    const std::size_t np = m.param_count();
    std::vector<double> grad(np), adam_m(np, 0.0), adam_v(np, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long step = 0;
    std::mt19937_64 rng(config.seed);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        SequenceLoss sum;
        for (const auto& seq : dataset.sequences) {
            Frames inputs = teacher_inputs(seq, config.noise_stddev, rng);
            std::fill(grad.begin(), grad.end(), 0.0);
            SequenceLoss loss =
                sequence_gradients(m, seq, dataset.skeleton, inputs, weights, lambdas, config, &grad);
            sum.total += loss.total;
            sum.mse += loss.mse;
            sum.bone += loss.bone;
            sum.pose += loss.pose;
            sum.eos += loss.eos;

            ++step;
            double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < np; ++i) {
                adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * grad[i];
                adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
                m.params[i] -= config.learning_rate * (adam_m[i] / bc1) /
                               (std::sqrt(adam_v[i] / bc2) + eps);
            }
        }
        double inv = 1.0 / static_cast<double>(dataset.sequences.size());
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean.total = sum.total * inv;
        stats.mean.mse = sum.mse * inv;
        stats.mean.bone = sum.bone * inv;
        stats.mean.pose = sum.pose * inv;
        stats.mean.eos = sum.eos * inv;
        result.log.push_back(stats);
    }
    return result;
}

void save_train_log(const std::vector<EpochStats>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training log: " + path.string());
    out << "epoch,total,mse,bone,pose,eos\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", e.epoch, e.mean.total,
                      e.mean.mse, e.mean.bone, e.mean.pose, e.mean.eos);
        out << buf;
    }
}

PoseSequence generate(const ToyModel& model, const std::vector<std::string>& tokens,
                      const TerminationConfig& termination, const std::string& id) {
    termination.validate();
    PoseSequence seq;
    seq.id = id;
    seq.tokens = tokens;
    Pose prev(model.joints, Vec3{});
    for (int t = 1; t <= termination.max_frames; ++t) {
        StepOutput out = forward_step(model, tokens, prev, t);
        for (const Vec3& p : out.pose) {
            if (!p.finite())
                throw DataError("non-finite generated pose at frame " + std::to_string(t));
        }
        seq.frames.push_back(out.pose);
        bool cont;
        if (termination.mode == TerminationMode::eos) {
            double p = out.eos_probability;
            if (termination.polarity == EosPolarity::end) p = 1.0 - p;
            cont = eos_decision(p, termination.tau);
        } else {
            cont = counter_decision(out.counter);
        }
        if (!cont) break;
        prev = out.pose;
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Binary serialization: magic "SGKT", version byte, little-endian fields.

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kMagic[4] = {'S', 'G', 'K', 'T'};
constexpr unsigned char kVersion = 1;

}  // namespace

void ToyModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    put_u32(out, static_cast<std::uint32_t>(vocab.size()));
    put_u32(out, static_cast<std::uint32_t>(emb_dim));
    put_u32(out, static_cast<std::uint32_t>(hidden_dim));
    put_u32(out, static_cast<std::uint32_t>(joints));
    put_u32(out, static_cast<std::uint32_t>(max_frames));
    for (const auto& tok : vocab) {
        put_u32(out, static_cast<std::uint32_t>(tok.size()));
        out.write(tok.data(), static_cast<std::streamsize>(tok.size()));
    }
    for (double p : params) put_f64(out, p);
    if (!out) throw IoError("write failure on model file: " + path.string());
}

ToyModel ToyModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a model file (bad magic): " + path.string());
    int version = in.get();
    if (version != kVersion)
        throw DataError("unsupported model format version " + std::to_string(version));
    ToyModel m;
    std::uint32_t vocab_size = get_u32(in);
    m.emb_dim = static_cast<int>(get_u32(in));
    m.hidden_dim = static_cast<int>(get_u32(in));
    m.joints = static_cast<int>(get_u32(in));
    m.max_frames = static_cast<int>(get_u32(in));
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        std::uint32_t len = get_u32(in);
        std::string tok(len, '\0');
        in.read(tok.data(), static_cast<std::streamsize>(len));
        m.vocab.push_back(std::move(tok));
    }
    m.params.resize(m.param_count());
    for (double& p : m.params) p = get_f64(in);
    if (!in) throw DataError("truncated model file: " + path.string());
    return m;
}

}  // namespace signkit
