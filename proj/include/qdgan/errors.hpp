#pragma once

#include <stdexcept>
#include <string>

namespace qdgan {

// Invalid configuration (bad hyperparameters, impossible layer setup).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: violated precondition of an operation.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (IDX parsing, checkpoints).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered while training a network.
struct training_divergence : std::runtime_error {
    explicit training_divergence(const std::string& what, long layer = -1)
        : std::runtime_error(what), layer_index(layer) {}
    long layer_index;
};

// Numerical failure inside a metric computation (e.g. eigensolver).
struct metric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Genome whose layer-shape inference has no valid solution.
struct infeasible_phenotype : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qdgan
