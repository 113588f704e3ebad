#include "signkit/termination.hpp"

namespace signkit {

double eos_probability(const std::vector<double>& hidden, const EosHead& head) {
    if (hidden.size() != head.weight_vector.size())
        throw DataError("eos head: hidden dimension mismatch");
    double logit = head.bias;
    for (std::size_t i = 0; i < hidden.size(); ++i) logit += head.weight_vector[i] * hidden[i];
    return sigmoid(logit);
}

bool eos_decision(double p, double tau) { return p > tau; }

bool counter_decision(double counter) { return counter < 1.0; }

}  // namespace signkit
