#pragma once

#include <string>
#include <vector>

#include "signkit/geometry.hpp"

namespace signkit {

// Sigmoid classification head over the decoder hidden state.
struct EosHead {
    std::vector<double> weight_vector;
    double bias = 0.0;
};

enum class TerminationMode { eos, counter };

// Interpretation of the EOS probability. The decision rule is always
// "continue iff p > tau"; `end` polarity flips p to 1 - p first, treating the
// head output as an end probability instead of a continue probability.
enum class EosPolarity { continue_generation, end };

struct TerminationConfig {
    TerminationMode mode = TerminationMode::eos;
    double tau = 0.5;
    int max_frames = 512;
    EosPolarity polarity = EosPolarity::continue_generation;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0)) throw DataError("termination: tau must be in (0,1)");
        if (max_frames < 1) throw DataError("termination: max_frames must be >= 1");
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double eos_probability(const std::vector<double>& hidden, const EosHead& head);

// Continue iff p > tau, strictly.
bool eos_decision(double p, double tau);

// Counter baseline: continue while the predicted progress counter is < 1.
bool counter_decision(double counter);

}  // namespace signkit
