// signkit: synthetic sign-motion data, geometric-loss training, and
// kinematic evaluation from the command line.

#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "signkit/losses.hpp"
#include "signkit/metrics.hpp"
#include "signkit/model.hpp"
#include "signkit/posedata.hpp"
#include "signkit/weighting.hpp"

namespace fs = std::filesystem;
using namespace signkit;

namespace {

void print_config(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "resolved config [" << cmd << "]";
    for (const auto& [k, v] : kv) std::cout << " " << k << "=" << v;
    std::cout << "\n";
}

std::vector<std::string> split_tokens(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Generate one prediction per reference sequence, reusing its id and tokens.
Dataset generate_for_refs(const ToyModel& model, const Dataset& ref,
                          const TerminationConfig& term) {
    Dataset pred;
    pred.skeleton = ref.skeleton;
    pred.split = ref.split;
    for (const auto& seq : ref.sequences)
        pred.sequences.push_back(generate(model, seq.tokens, term, seq.id));
    return pred;
}

TrainConfig config_from_flags(const std::string& config_path, std::uint64_t seed, int epochs,
                              double lr, double alpha, double beta, double gamma,
                              double eos_weight, double noise, const std::string& mode,
                              double tau, int max_frames) {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = TrainConfig::load(config_path);
    cfg.seed = seed;
    if (epochs > 0) cfg.epochs = epochs;
    if (lr > 0) cfg.learning_rate = lr;
    if (alpha >= 0) cfg.coeffs.alpha = alpha;
    if (beta >= 0) cfg.coeffs.beta = beta;
    if (gamma >= 0) cfg.coeffs.gamma = gamma;
    if (eos_weight >= 0) cfg.coeffs.eos_weight = eos_weight;
    if (noise >= 0) cfg.noise_stddev = noise;
    if (!mode.empty()) {
        if (mode == "eos")
            cfg.termination.mode = TerminationMode::eos;
        else if (mode == "counter")
            cfg.termination.mode = TerminationMode::counter;
        else
            throw CLI::ValidationError("--mode must be 'eos' or 'counter'");
    }
    if (tau > 0) cfg.termination.tau = tau;
    if (max_frames > 0) cfg.termination.max_frames = max_frames;
    cfg.termination.validate();
    return cfg;
}

int run_gradcheck(std::uint64_t seed, int instances) {
    print_config("gradcheck", {{"seed", std::to_string(seed)}, {"instances", std::to_string(instances)}});
    Skeleton sk = Skeleton::default_skeleton();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);

    auto random_frames = [&](std::size_t t, std::size_t n) {
        Frames f(t, Pose(n));
        for (auto& pose : f)
            for (auto& p : pose) p = {coord(rng), coord(rng), coord(rng)};
        return f;
    };
    // Resample until no bone sits near a kink of the bone-length loss.
    auto non_kink_pair = [&](std::size_t t) {
        while (true) {
            Frames pred = random_frames(t, sk.joint_count());
            Frames ref = random_frames(t, sk.joint_count());
            bool ok = true;
            for (std::size_t f = 0; f < t && ok; ++f) {
                auto pl = bone_lengths(pred[f], sk);
                auto rl = bone_lengths(ref[f], sk);
                for (std::size_t i = 0; i < sk.joint_count(); ++i) {
                    if (sk.parents[i] < 0) continue;
                    if (pl[i] < 1e-3 || rl[i] < 1e-3 || std::abs(pl[i] - rl[i]) < 1e-3) ok = false;
                }
            }
            if (ok) return std::pair<Frames, Frames>(pred, ref);
        }
    };

    double worst_mse = 0, worst_bone = 0, worst_pose = 0;
    for (int k = 0; k < instances; ++k) {
        auto [pred, ref] = non_kink_pair(2);
        JointWeights w;
        for (std::size_t i = 0; i < sk.joint_count(); ++i) w.w.push_back(wdist(rng));
        BoneLambdas lam;
        for (std::size_t i = 0; i < sk.joint_count(); ++i) lam.lambda.push_back(wdist(rng));
        worst_mse = std::max(worst_mse, gradient_check([&](const Frames& p) {
            return weighted_mse_loss(p, ref, w);
        }, pred));
        worst_bone = std::max(worst_bone, gradient_check([&](const Frames& p) {
            return bone_length_loss(p, ref, sk, lam);
        }, pred));
        worst_pose = std::max(worst_pose, gradient_check([&](const Frames& p) {
            return bone_pose_loss(p, ref, sk);
        }, pred));
    }
    std::cout << "max relative error: mse=" << worst_mse << " bone_length=" << worst_bone
              << " bone_pose=" << worst_pose << "\n";
    bool ok = worst_mse < 1e-7 && worst_bone < 1e-5 && worst_pose < 1e-5;
    std::cout << (ok ? "gradcheck PASS\n" : "gradcheck FAIL\n");
    return ok ? 0 : 3;
}

// Tokens appearing anywhere in the dataset, sorted and deduplicated.
std::vector<std::string> model_vocab(const Dataset& ds) {
    std::set<std::string> toks;
    for (const auto& seq : ds.sequences) toks.insert(seq.tokens.begin(), seq.tokens.end());
    return {toks.begin(), toks.end()};
}

struct Variant {
    std::string name;
    LossCoefficients coeffs;
    TerminationMode mode = TerminationMode::eos;
};

int run_experiment(const std::string& config_path, const std::string& data_path,
                   const std::string& ref_path, const std::string& skeleton_path,
                   const std::string& out_dir, std::uint64_t seed) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open experiment config: " + config_path);
    nlohmann::json j;
    in >> j;
    std::vector<Variant> variants;
    std::set<std::string> names;
    for (const auto& vj : j.at("variants")) {
        Variant v;
        v.name = vj.at("name").get<std::string>();
        if (!names.insert(v.name).second)
            throw CLI::ValidationError("duplicate variant name '" + v.name + "'");
        if (vj.contains("alpha")) v.coeffs.alpha = vj["alpha"].get<double>();
        if (vj.contains("beta")) v.coeffs.beta = vj["beta"].get<double>();
        if (vj.contains("gamma")) v.coeffs.gamma = vj["gamma"].get<double>();
        if (vj.contains("eos_weight")) v.coeffs.eos_weight = vj["eos_weight"].get<double>();
        if (vj.contains("mode"))
            v.mode = vj["mode"].get<std::string>() == "counter" ? TerminationMode::counter
                                                                : TerminationMode::eos;
        variants.push_back(v);
    }
    if (variants.empty()) throw CLI::ValidationError("experiment config lists no variants");
    print_config("experiment", {{"config", config_path},
                                {"data", data_path},
                                {"ref", ref_path},
                                {"variants", std::to_string(variants.size())},
                                {"seed", std::to_string(seed)}});

    Skeleton sk = Skeleton::load(skeleton_path);
    Dataset train_set = load_dataset(data_path, sk, Split::train);
    Dataset ref_set = load_dataset(ref_path, sk, Split::test);
    JointWeights w = parent_relative_weights(joint_variances(train_set));
    BoneLambdas lam = BoneLambdas::uniform(sk.joint_count());

    fs::create_directories(out_dir);
    std::ofstream table(fs::path(out_dir) / "ablation.csv");
    table << "variant,bone_length_pct,variance_global_pct,variance_local_pct,"
             "velocity_global_pct,velocity_local_pct,frame_len_signed_pct,frame_len_abs_pct\n";
    for (const auto& v : variants) {
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.coeffs = v.coeffs;
        cfg.termination.mode = v.mode;
        cfg.epochs = j.value("epochs", 30);
        cfg.noise_stddev = j.value("noise_stddev", 0.01);
        cfg.learning_rate = j.value("learning_rate", 1e-3);
        ToyModel model = init_model(cfg, model_vocab(train_set), static_cast<int>(sk.joint_count()));
        TrainResult res = train(model, train_set, v.coeffs.alpha != 0.0 ? w : JointWeights::uniform(sk.joint_count()), lam, cfg);
        Dataset pred = generate_for_refs(res.model, ref_set, cfg.termination);
        MetricsBundle mb = evaluate_all(pred, ref_set);
        char buf[320];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", v.name.c_str(),
                      mb.bone_length.overall, mb.variance_global.overall, mb.variance_local.overall,
                      mb.velocity_global.overall, mb.velocity_local.overall,
                      mb.frame_length.mean_signed_rel_diff, mb.frame_length.mean_abs_rel_diff);
        table << buf;
        std::cout << "variant " << v.name << " done\n";
    }
    std::cout << "wrote " << (fs::path(out_dir) / "ablation.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"signkit: skeletal sign-motion toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic sign-like dataset");
    std::uint64_t synth_seed = 0;
    std::string synth_out, synth_config;
    std::size_t synth_num = 0;
    synth->add_option("--seed", synth_seed, "RNG seed")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--num", synth_num, "Number of sequences");
    synth->add_option("--config", synth_config, "Generator config JSON");

    // weights compute
    auto* weights_cmd = app.add_subcommand("weights", "Joint weight statistics");
    auto* weights_compute = weights_cmd->add_subcommand("compute", "Compute parent-relative joint weights");
    weights_cmd->require_subcommand(1);
    std::string wt_data, wt_skeleton, wt_out;
    weights_compute->add_option("--data", wt_data, "Dataset JSONL")->required();
    weights_compute->add_option("--skeleton", wt_skeleton, "Skeleton JSON")->required();
    weights_compute->add_option("--out", wt_out, "Output weights JSON")->required();

    // lambda compute
    auto* lambda_cmd = app.add_subcommand("lambda", "Bone-length reweighting factors");
    auto* lambda_compute = lambda_cmd->add_subcommand("compute", "Compute per-bone lambda from dev predictions");
    lambda_cmd->require_subcommand(1);
    std::string lm_pred, lm_ref, lm_skeleton, lm_out;
    lambda_compute->add_option("--pred", lm_pred, "Predicted dev dataset JSONL")->required();
    lambda_compute->add_option("--ref", lm_ref, "Reference dev dataset JSONL")->required();
    lambda_compute->add_option("--skeleton", lm_skeleton, "Skeleton JSON")->required();
    lambda_compute->add_option("--out", lm_out, "Output lambda JSON")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the autoregressive pose regressor");
    std::string tr_data, tr_skeleton, tr_out, tr_config, tr_log, tr_weights, tr_lambdas, tr_mode;
    std::uint64_t tr_seed = 0;
    int tr_epochs = -1, tr_max_frames = -1;
    double tr_lr = -1, tr_alpha = -1, tr_beta = -1, tr_gamma = -1, tr_eosw = -1, tr_noise = -1,
           tr_tau = -1;
    train_cmd->add_option("--data", tr_data, "Training dataset JSONL")->required();
    train_cmd->add_option("--skeleton", tr_skeleton, "Skeleton JSON")->required();
    train_cmd->add_option("--out", tr_out, "Output model file")->required();
    train_cmd->add_option("--seed", tr_seed, "RNG seed")->required();
    train_cmd->add_option("--config", tr_config, "Train config JSON");
    train_cmd->add_option("--log", tr_log, "Per-epoch loss CSV");
    train_cmd->add_option("--weights", tr_weights, "Joint weights JSON (default: computed from data)");
    train_cmd->add_option("--lambdas", tr_lambdas, "Bone lambda JSON (default: uniform 1)");
    train_cmd->add_option("--epochs", tr_epochs, "Training epochs");
    train_cmd->add_option("--lr", tr_lr, "Learning rate");
    train_cmd->add_option("--alpha", tr_alpha, "Reconstruction loss coefficient");
    train_cmd->add_option("--beta", tr_beta, "Bone-length loss coefficient");
    train_cmd->add_option("--gamma", tr_gamma, "Bone-pose loss coefficient");
    train_cmd->add_option("--eos-weight", tr_eosw, "Termination head loss coefficient");
    train_cmd->add_option("--noise", tr_noise, "Teacher-forcing noise stddev");
    train_cmd->add_option("--mode", tr_mode, "Termination mode: eos|counter");
    train_cmd->add_option("--tau", tr_tau, "EOS threshold");
    train_cmd->add_option("--max-frames", tr_max_frames, "Generation hard cap");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate pose sequences from a trained model");
    std::string gen_model, gen_out, gen_tokens, gen_from, gen_mode;
    double gen_tau = -1;
    int gen_max_frames = -1;
    gen_cmd->add_option("--model", gen_model, "Model file")->required();
    gen_cmd->add_option("--out", gen_out, "Output JSONL")->required();
    gen_cmd->add_option("--tokens", gen_tokens, "Comma-separated tokens for a single sequence");
    gen_cmd->add_option("--from", gen_from, "Reference JSONL; generate one sequence per entry");
    gen_cmd->add_option("--skeleton", wt_skeleton, "Skeleton JSON (required with --from)");
    gen_cmd->add_option("--mode", gen_mode, "Termination mode: eos|counter");
    gen_cmd->add_option("--tau", gen_tau, "EOS threshold");
    gen_cmd->add_option("--max-frames", gen_max_frames, "Generation hard cap");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against references");
    std::string ev_pred, ev_ref, ev_skeleton, ev_out;
    eval_cmd->add_option("--pred", ev_pred, "Predicted JSONL")->required();
    eval_cmd->add_option("--ref", ev_ref, "Reference JSONL")->required();
    eval_cmd->add_option("--skeleton", ev_skeleton, "Skeleton JSON")->required();
    eval_cmd->add_option("--out", ev_out, "Report directory")->required();

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
    std::uint64_t gc_seed = 0;
    int gc_instances = 20;
    gc_cmd->add_option("--seed", gc_seed, "RNG seed")->required();
    gc_cmd->add_option("--instances", gc_instances, "Random instances per loss");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Train and evaluate a set of loss variants");
    std::string ex_config, ex_data, ex_ref, ex_skeleton, ex_out;
    std::uint64_t ex_seed = 0;
    exp_cmd->add_option("--config", ex_config, "Experiment config JSON")->required();
    exp_cmd->add_option("--data", ex_data, "Training dataset JSONL")->required();
    exp_cmd->add_option("--ref", ex_ref, "Reference/test dataset JSONL")->required();
    exp_cmd->add_option("--skeleton", ex_skeleton, "Skeleton JSON")->required();
    exp_cmd->add_option("--out", ex_out, "Output directory")->required();
    exp_cmd->add_option("--seed", ex_seed, "Shared RNG seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            SynthConfig cfg =
                synth_config.empty() ? SynthConfig::defaults() : SynthConfig::load(synth_config);
            if (synth_num > 0) cfg.num_sequences = synth_num;
            print_config("synth", {{"seed", std::to_string(synth_seed)},
                                   {"out", synth_out},
                                   {"num", std::to_string(cfg.num_sequences)},
                                   {"vocabulary", std::to_string(cfg.vocabulary.size())},
                                   {"frame_jitter", std::to_string(cfg.frame_jitter)}});
            Dataset ds = synthesize_dataset(cfg, synth_seed);
            fs::create_directories(synth_out);
            ds.skeleton.save(fs::path(synth_out) / "skeleton.json");
            save_dataset(ds, fs::path(synth_out) / "dataset.jsonl");
            std::cout << "wrote " << ds.sequences.size() << " sequences to " << synth_out << "\n";
        } else if (weights_cmd->parsed()) {
            print_config("weights compute",
                         {{"data", wt_data}, {"skeleton", wt_skeleton}, {"out", wt_out}});
            Skeleton sk = Skeleton::load(wt_skeleton);
            Dataset ds = load_dataset(wt_data, sk);
            parent_relative_weights(joint_variances(ds)).save(wt_out);
            std::cout << "wrote " << wt_out << "\n";
        } else if (lambda_cmd->parsed()) {
            print_config("lambda compute", {{"pred", lm_pred},
                                            {"ref", lm_ref},
                                            {"skeleton", lm_skeleton},
                                            {"out", lm_out}});
            Skeleton sk = Skeleton::load(lm_skeleton);
            Dataset pred = load_dataset(lm_pred, sk, Split::dev);
            Dataset ref = load_dataset(lm_ref, sk, Split::dev);
            bone_length_lambda(pred, ref).save(lm_out);
            std::cout << "wrote " << lm_out << "\n";
        } else if (train_cmd->parsed()) {
            TrainConfig cfg = config_from_flags(tr_config, tr_seed, tr_epochs, tr_lr, tr_alpha,
                                                tr_beta, tr_gamma, tr_eosw, tr_noise, tr_mode,
                                                tr_tau, tr_max_frames);
            print_config("train",
                         {{"data", tr_data},
                          {"seed", std::to_string(cfg.seed)},
                          {"epochs", std::to_string(cfg.epochs)},
                          {"lr", std::to_string(cfg.learning_rate)},
                          {"alpha", std::to_string(cfg.coeffs.alpha)},
                          {"beta", std::to_string(cfg.coeffs.beta)},
                          {"gamma", std::to_string(cfg.coeffs.gamma)},
                          {"eos_weight", std::to_string(cfg.coeffs.eos_weight)},
                          {"noise", std::to_string(cfg.noise_stddev)},
                          {"mode", cfg.termination.mode == TerminationMode::eos ? "eos" : "counter"}});
            Skeleton sk = Skeleton::load(tr_skeleton);
            Dataset ds = load_dataset(tr_data, sk, Split::train);
            JointWeights w = tr_weights.empty()
                                 ? parent_relative_weights(joint_variances(ds))
                                 : JointWeights::load(tr_weights);
            BoneLambdas lam = tr_lambdas.empty() ? BoneLambdas::uniform(sk.joint_count())
                                                 : BoneLambdas::load(tr_lambdas);
            ToyModel model = init_model(cfg, model_vocab(ds), static_cast<int>(sk.joint_count()));
            TrainResult res = train(model, ds, w, lam, cfg);
            res.model.save(tr_out);
            if (!tr_log.empty()) save_train_log(res.log, tr_log);
            std::cout << "final epoch loss " << res.log.back().mean.total << ", wrote " << tr_out
                      << "\n";
        } else if (gen_cmd->parsed()) {
            if (gen_tokens.empty() == gen_from.empty())
                throw CLI::ValidationError("generate requires exactly one of --tokens / --from");
            ToyModel model = ToyModel::load(gen_model);
            TerminationConfig term;
            term.max_frames = model.max_frames;
            if (!gen_mode.empty())
                term.mode = gen_mode == "counter" ? TerminationMode::counter : TerminationMode::eos;
            if (gen_tau > 0) term.tau = gen_tau;
            if (gen_max_frames > 0) term.max_frames = gen_max_frames;
            term.validate();
            print_config("generate", {{"model", gen_model},
                                      {"mode", term.mode == TerminationMode::eos ? "eos" : "counter"},
                                      {"tau", std::to_string(term.tau)},
                                      {"max_frames", std::to_string(term.max_frames)}});
            Dataset out;
            out.skeleton = Skeleton::default_skeleton();
            if (!gen_tokens.empty()) {
                out.sequences.push_back(generate(model, split_tokens(gen_tokens), term));
            } else {
                if (wt_skeleton.empty())
                    throw CLI::ValidationError("--from requires --skeleton");
                Skeleton sk = Skeleton::load(wt_skeleton);
                Dataset ref = load_dataset(gen_from, sk, Split::test);
                out = generate_for_refs(model, ref, term);
            }
            save_dataset(out, gen_out);
            std::cout << "wrote " << out.sequences.size() << " sequences to " << gen_out << "\n";
        } else if (eval_cmd->parsed()) {
            print_config("eval", {{"pred", ev_pred},
                                  {"ref", ev_ref},
                                  {"skeleton", ev_skeleton},
                                  {"out", ev_out}});
            Skeleton sk = Skeleton::load(ev_skeleton);
            Dataset pred = load_dataset(ev_pred, sk, Split::test);
            Dataset ref = load_dataset(ev_ref, sk, Split::test);
            MetricsBundle mb = evaluate_all(pred, ref);
            emit_report(mb, ev_out);
            std::cout << "bone length deviation overall: " << mb.bone_length.overall << "%\n";
            std::cout << "frame length mean abs diff: " << mb.frame_length.mean_abs_rel_diff
                      << "%\n";
            std::cout << "wrote report to " << ev_out << "\n";
        } else if (gc_cmd->parsed()) {
            return run_gradcheck(gc_seed, gc_instances);
        } else if (exp_cmd->parsed()) {
            return run_experiment(ex_config, ex_data, ex_ref, ex_skeleton, ex_out, ex_seed);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
