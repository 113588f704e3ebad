#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "signkit/skeleton.hpp"

namespace signkit {

struct PoseSequence {
    std::string id;
    std::vector<std::string> tokens;
    Frames frames;  // T x N x 3, T >= 1
};

enum class Split { train, dev, test };

struct Dataset {
    Skeleton skeleton;
    std::vector<PoseSequence> sequences;
    Split split = Split::train;
};

// Checks joint counts, T >= 1 and finiteness; throws DataError naming the
// offending sequence and frame.
void validate_dataset(const Dataset& dataset);

// JSONL: one {"id", "tokens", "frames"} object per line. The skeleton lives
// in its own JSON file and is passed in here.
Dataset load_dataset(const std::filesystem::path& path, const Skeleton& skeleton,
                     Split split = Split::train);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Uniformly rescales each frame about the root so the mean ratio of its bone
// lengths to reference_lengths is 1. reference_lengths is indexed by child
// joint like bone_lengths().
PoseSequence normalize_skeleton_scale(const PoseSequence& sequence, const Skeleton& skeleton,
                                      const std::vector<double>& reference_lengths);

Pose add_gaussian_noise(const Pose& pose, double stddev, std::mt19937_64& rng);

// Synthetic generator: sequences of 1-3 motion-primitive tokens realized as
// smooth link-angle trajectories over fixed bone lengths.
struct SynthConfig {
    std::vector<std::string> vocabulary;   // subset of known_primitives(); empty = invalid
    std::size_t num_sequences = 100;
    int frame_jitter = 5;                  // +- frames added to the token-determined count
    std::vector<double> bone_lengths;      // per child joint; empty = defaults
    static SynthConfig defaults();
    static SynthConfig load(const std::filesystem::path& path);
};

std::vector<std::string> known_primitives();

Dataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed);

}  // namespace signkit
