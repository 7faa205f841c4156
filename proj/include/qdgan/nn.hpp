#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdgan/rng.hpp"
#include "qdgan/tensor.hpp"

namespace qdgan {

enum class LayerKind { Linear, Conv2d, Deconv2d };
enum class Activation { ReLU, LeakyReLU, ELU, Sigmoid, Tanh, None };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kEluAlpha = 1.0;

// The five activations a gene may carry (excludes None, which only the
// framework itself uses for affine-only layers).
inline constexpr Activation kGeneActivations[] = {
    Activation::ReLU, Activation::LeakyReLU, Activation::ELU,
    Activation::Sigmoid, Activation::Tanh};

std::string to_string(LayerKind k);
std::string to_string(Activation a);
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

struct LayerHyper {
    std::size_t in_features = 0, out_features = 0;  // Linear
    std::size_t in_channels = 0, out_channels = 0;  // Conv2d / Deconv2d
    std::size_t kernel = 3, stride = 2, padding = 1, output_padding = 1;
};

struct LayerParams {
    LayerKind kind = LayerKind::Linear;
    Tensor weights;  // Linear: (out,in); Conv2d: (oc,ic,k,k); Deconv2d: (ic,oc,k,k)
    Tensor bias;     // (out) / (oc)
    Activation activation = Activation::None;
    LayerHyper hyper;
};

// Spatial size after a convolution: floor((h + 2p - k) / s) + 1.
std::size_t conv_out_size(std::size_t h, std::size_t k, std::size_t s, std::size_t p);
// Spatial size after a transposed convolution: (h - 1)s - 2p + k + op.
std::size_t deconv_out_size(std::size_t h, std::size_t k, std::size_t s, std::size_t p,
                            std::size_t op);

Tensor apply_activation(Activation kind, const Tensor& input);

// Captured intermediate state of one forward pass. inputs[i] is the tensor
// fed to layer i (after any reshape), inputs.back() the network output;
// preact[i] is layer i's affine output before its activation.
struct ForwardTrace {
    std::vector<Tensor> inputs;
    std::vector<Tensor> preact;
    const Tensor& output() const { return inputs.back(); }
};

// Runs the layer stack on `input` (leading dimension = batch). Linear layers
// flatten trailing dimensions; Conv2d/Deconv2d require (N,C,H,W) input unless
// `in_shapes` supplies an explicit per-layer input shape (without batch dim).
ForwardTrace forward_trace(std::span<const LayerParams> network, const Tensor& input,
                           std::span<const Shape> in_shapes = {});
Tensor forward(std::span<const LayerParams> network, const Tensor& input,
               std::span<const Shape> in_shapes = {});

struct LayerGrads {
    Tensor weights;
    Tensor bias;
};

struct BackwardResult {
    std::vector<LayerGrads> layers;
    Tensor input_grad;
};

// Reverse-mode gradients for every weight/bias plus the gradient w.r.t. the
// network input. `trace` must come from forward_trace on the same network.
BackwardResult backward(std::span<const LayerParams> network, const ForwardTrace& trace,
                        const Tensor& output_grad);

struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamState sized(std::size_t n) {
        AdamState s;
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
        return s;
    }
};

// One Adam update with bias correction, in place. `layer_index` only labels
// the training_divergence error raised on a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate, long layer_index = -1);

// Fresh layer: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], bias zero.
// hyper must carry the input dimension (in_features or in_channels).
LayerParams init_params(LayerKind kind, const LayerHyper& hyper, Activation activation,
                        Rng& rng);

std::size_t param_count(const LayerParams& layer);

}  // namespace qdgan
