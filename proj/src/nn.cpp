#include "qdgan/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "qdgan/errors.hpp"

namespace qdgan {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

double activate_one(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::LeakyReLU: return z > 0.0 ? z : kLeakySlope * z;
        case Activation::ELU: return z > 0.0 ? z : kEluAlpha * (std::exp(z) - 1.0);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Tanh: return std::tanh(z);
        case Activation::None: return z;
    }
    return z;
}

// Derivative of the activation at pre-activation z, given act(z).
double activate_grad_one(Activation a, double z, double y) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::LeakyReLU: return z > 0.0 ? 1.0 : kLeakySlope;
        case Activation::ELU: return z > 0.0 ? 1.0 : y + kEluAlpha;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::None: return 1.0;
    }
    return 1.0;
}

std::size_t batch_of(const Tensor& t) {
    if (t.shape.empty()) throw usage_error("network input must have a batch dimension");
    return t.shape[0];
}

// Shape of the tensor fed to `layer`, given the incoming tensor. Linear
// layers flatten; spatial layers require an explicit (C,H,W) tail.
Shape expected_input(const LayerParams& layer, const Tensor& incoming, std::size_t index,
                     const Shape* explicit_shape) {
    std::size_t n = batch_of(incoming);
    std::size_t flat = incoming.size() / n;
    if (explicit_shape != nullptr) {
        Shape s{n};
        s.insert(s.end(), explicit_shape->begin(), explicit_shape->end());
        if (shape_numel(s) != incoming.size())
            throw config_error("layer " + std::to_string(index) + ": cannot view " +
                               shape_str(incoming.shape) + " as " + shape_str(s));
        return s;
    }
    if (layer.kind == LayerKind::Linear) {
        if (flat != layer.hyper.in_features)
            throw config_error("layer " + std::to_string(index) + ": expected " +
                               std::to_string(layer.hyper.in_features) + " features, got " +
                               std::to_string(flat));
        return Shape{n, flat};
    }
    if (incoming.shape.size() != 4 || incoming.shape[1] != layer.hyper.in_channels)
        throw config_error("layer " + std::to_string(index) + ": expected (N," +
                           std::to_string(layer.hyper.in_channels) +
                           ",H,W) input, got " + shape_str(incoming.shape));
    return incoming.shape;
}

Tensor linear_forward(const LayerParams& l, const Tensor& x) {
    std::size_t n = x.shape[0], fi = l.hyper.in_features, fo = l.hyper.out_features;
    Tensor y = Tensor::zeros({n, fo});
    MapConstMat xm(x.values.data(), n, fi);
    MapConstMat wm(l.weights.values.data(), fo, fi);
    MapMat ym(y.values.data(), n, fo);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(l.bias.values.data(), fo);
    return y;
}

void linear_backward(const LayerParams& l, const Tensor& x, const Tensor& dy,
                     LayerGrads& g, Tensor& dx) {
    std::size_t n = x.shape[0], fi = l.hyper.in_features, fo = l.hyper.out_features;
    MapConstMat xm(x.values.data(), n, fi);
    MapConstMat dym(dy.values.data(), n, fo);
    MapConstMat wm(l.weights.values.data(), fo, fi);
    MapMat dwm(g.weights.values.data(), fo, fi);
    MapMat dxm(dx.values.data(), n, fi);
    dwm.noalias() = dym.transpose() * xm;
    Eigen::Map<Eigen::RowVectorXd>(g.bias.values.data(), fo) = dym.colwise().sum();
    dxm.noalias() = dym * wm;
}

Tensor conv2d_forward(const LayerParams& l, const Tensor& x) {
    const auto& h = l.hyper;
    std::size_t n = x.shape[0], ic = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    std::size_t oh = conv_out_size(ih, h.kernel, h.stride, h.padding);
    std::size_t ow = conv_out_size(iw, h.kernel, h.stride, h.padding);
    Tensor y = Tensor::zeros({n, h.out_channels, oh, ow});
    const double* w = l.weights.values.data();
    const long pad = static_cast<long>(h.padding);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
            double* yp = y.values.data() + ((b * h.out_channels + oc) * oh) * ow;
            const double bias = l.bias.values[oc];
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t cidx = 0; cidx < ow; ++cidx) {
                    double acc = bias;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const double* xp = x.values.data() + ((b * ic + c) * ih) * iw;
                        const double* wp = w + ((oc * ic + c) * h.kernel) * h.kernel;
                        for (std::size_t kh = 0; kh < h.kernel; ++kh) {
                            long yy = static_cast<long>(r * h.stride + kh) - pad;
                            if (yy < 0 || yy >= static_cast<long>(ih)) continue;
                            for (std::size_t kw = 0; kw < h.kernel; ++kw) {
                                long xx = static_cast<long>(cidx * h.stride + kw) - pad;
                                if (xx < 0 || xx >= static_cast<long>(iw)) continue;
                                acc += xp[yy * static_cast<long>(iw) + xx] * wp[kh * h.kernel + kw];
                            }
                        }
                    }
                    yp[r * ow + cidx] = acc;
                }
        }
    return y;
}

void conv2d_backward(const LayerParams& l, const Tensor& x, const Tensor& dy,
                     LayerGrads& g, Tensor& dx) {
    const auto& h = l.hyper;
    std::size_t n = x.shape[0], ic = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    std::size_t oh = dy.shape[2], ow = dy.shape[3];
    const double* w = l.weights.values.data();
    const long pad = static_cast<long>(h.padding);
    for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
        double sum = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double* dyp = dy.values.data() + ((b * h.out_channels + oc) * oh) * ow;
            for (std::size_t i = 0; i < oh * ow; ++i) sum += dyp[i];
        }
        g.bias.values[oc] = sum;
    }
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
            const double* dyp = dy.values.data() + ((b * h.out_channels + oc) * oh) * ow;
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t cidx = 0; cidx < ow; ++cidx) {
                    const double dv = dyp[r * ow + cidx];
                    if (dv == 0.0) continue;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const double* xp = x.values.data() + ((b * ic + c) * ih) * iw;
                        double* dxp = dx.values.data() + ((b * ic + c) * ih) * iw;
                        const double* wp = w + ((oc * ic + c) * h.kernel) * h.kernel;
                        double* dwp = g.weights.values.data() + ((oc * ic + c) * h.kernel) * h.kernel;
                        for (std::size_t kh = 0; kh < h.kernel; ++kh) {
                            long yy = static_cast<long>(r * h.stride + kh) - pad;
                            if (yy < 0 || yy >= static_cast<long>(ih)) continue;
                            for (std::size_t kw = 0; kw < h.kernel; ++kw) {
                                long xx = static_cast<long>(cidx * h.stride + kw) - pad;
                                if (xx < 0 || xx >= static_cast<long>(iw)) continue;
                                dwp[kh * h.kernel + kw] += xp[yy * static_cast<long>(iw) + xx] * dv;
                                dxp[yy * static_cast<long>(iw) + xx] += wp[kh * h.kernel + kw] * dv;
                            }
                        }
                    }
                }
        }
}

Tensor deconv2d_forward(const LayerParams& l, const Tensor& x) {
    const auto& h = l.hyper;
    std::size_t n = x.shape[0], ic = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    std::size_t oh = deconv_out_size(ih, h.kernel, h.stride, h.padding, h.output_padding);
    std::size_t ow = deconv_out_size(iw, h.kernel, h.stride, h.padding, h.output_padding);
    Tensor y = Tensor::zeros({n, h.out_channels, oh, ow});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
            double* yp = y.values.data() + ((b * h.out_channels + oc) * oh) * ow;
            const double bias = l.bias.values[oc];
            for (std::size_t i = 0; i < oh * ow; ++i) yp[i] = bias;
        }
    const long pad = static_cast<long>(h.padding);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < ic; ++c) {
            const double* xp = x.values.data() + ((b * ic + c) * ih) * iw;
            for (std::size_t r = 0; r < ih; ++r)
                for (std::size_t cc = 0; cc < iw; ++cc) {
                    const double xv = xp[r * iw + cc];
                    if (xv == 0.0) continue;
                    for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
                        double* yp = y.values.data() + ((b * h.out_channels + oc) * oh) * ow;
                        const double* wp =
                            l.weights.values.data() + ((c * h.out_channels + oc) * h.kernel) * h.kernel;
                        for (std::size_t kh = 0; kh < h.kernel; ++kh) {
                            long yy = static_cast<long>(r * h.stride + kh) - pad;
                            if (yy < 0 || yy >= static_cast<long>(oh)) continue;
                            for (std::size_t kw = 0; kw < h.kernel; ++kw) {
                                long xx = static_cast<long>(cc * h.stride + kw) - pad;
                                if (xx < 0 || xx >= static_cast<long>(ow)) continue;
                                yp[yy * static_cast<long>(ow) + xx] += xv * wp[kh * h.kernel + kw];
                            }
                        }
                    }
                }
        }
    return y;
}

void deconv2d_backward(const LayerParams& l, const Tensor& x, const Tensor& dy,
                       LayerGrads& g, Tensor& dx) {
    const auto& h = l.hyper;
    std::size_t n = x.shape[0], ic = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    std::size_t oh = dy.shape[2], ow = dy.shape[3];
    const long pad = static_cast<long>(h.padding);
    for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
        double sum = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double* dyp = dy.values.data() + ((b * h.out_channels + oc) * oh) * ow;
            for (std::size_t i = 0; i < oh * ow; ++i) sum += dyp[i];
        }
        g.bias.values[oc] = sum;
    }
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < ic; ++c) {
            const double* xp = x.values.data() + ((b * ic + c) * ih) * iw;
            double* dxp = dx.values.data() + ((b * ic + c) * ih) * iw;
            for (std::size_t r = 0; r < ih; ++r)
                for (std::size_t cc = 0; cc < iw; ++cc) {
                    const double xv = xp[r * iw + cc];
                    double acc = 0.0;
                    for (std::size_t oc = 0; oc < h.out_channels; ++oc) {
                        const double* dyp = dy.values.data() + ((b * h.out_channels + oc) * oh) * ow;
                        const double* wp =
                            l.weights.values.data() + ((c * h.out_channels + oc) * h.kernel) * h.kernel;
                        double* dwp =
                            g.weights.values.data() + ((c * h.out_channels + oc) * h.kernel) * h.kernel;
                        for (std::size_t kh = 0; kh < h.kernel; ++kh) {
                            long yy = static_cast<long>(r * h.stride + kh) - pad;
                            if (yy < 0 || yy >= static_cast<long>(oh)) continue;
                            for (std::size_t kw = 0; kw < h.kernel; ++kw) {
                                long xx = static_cast<long>(cc * h.stride + kw) - pad;
                                if (xx < 0 || xx >= static_cast<long>(ow)) continue;
                                const double dv = dyp[yy * static_cast<long>(ow) + xx];
                                acc += wp[kh * h.kernel + kw] * dv;
                                dwp[kh * h.kernel + kw] += xv * dv;
                            }
                        }
                    }
                    dxp[r * iw + cc] = acc;
                }
        }
}

}  // namespace

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Linear: return "linear";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Deconv2d: return "deconv2d";
    }
    return "?";
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::ELU: return "elu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::None: return "none";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "linear") return LayerKind::Linear;
    if (s == "conv2d") return LayerKind::Conv2d;
    if (s == "deconv2d") return LayerKind::Deconv2d;
    throw usage_error("unknown layer kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "leaky_relu") return Activation::LeakyReLU;
    if (s == "elu") return Activation::ELU;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "tanh") return Activation::Tanh;
    if (s == "none") return Activation::None;
    throw usage_error("unknown activation '" + s + "'");
}

std::size_t conv_out_size(std::size_t h, std::size_t k, std::size_t s, std::size_t p) {
    if (h + 2 * p < k) throw config_error("convolution input smaller than kernel");
    return (h + 2 * p - k) / s + 1;
}

std::size_t deconv_out_size(std::size_t h, std::size_t k, std::size_t s, std::size_t p,
                            std::size_t op) {
    std::size_t grown = (h - 1) * s + k + op;
    if (grown < 2 * p) throw config_error("transposed convolution output collapsed");
    return grown - 2 * p;
}

Tensor apply_activation(Activation kind, const Tensor& input) {
    Tensor out = input;
    for (double& v : out.values) v = activate_one(kind, v);
    return out;
}

ForwardTrace forward_trace(std::span<const LayerParams> network, const Tensor& input,
                           std::span<const Shape> in_shapes) {
    if (network.empty()) throw usage_error("forward on empty network");
    if (!in_shapes.empty() && in_shapes.size() != network.size())
        throw usage_error("in_shapes size does not match network size");
    ForwardTrace trace;
    trace.inputs.reserve(network.size() + 1);
    trace.preact.reserve(network.size());
    Tensor current = input;
    for (std::size_t i = 0; i < network.size(); ++i) {
        const LayerParams& layer = network[i];
        Shape want = expected_input(layer, current, i,
                                    in_shapes.empty() ? nullptr : &in_shapes[i]);
        current = current.reshaped(std::move(want));
        trace.inputs.push_back(current);
        Tensor z;
        switch (layer.kind) {
            case LayerKind::Linear: z = linear_forward(layer, current); break;
            case LayerKind::Conv2d: z = conv2d_forward(layer, current); break;
            case LayerKind::Deconv2d: z = deconv2d_forward(layer, current); break;
        }
        trace.preact.push_back(z);
        current = apply_activation(layer.activation, z);
    }
    trace.inputs.push_back(current);
    return trace;
}

Tensor forward(std::span<const LayerParams> network, const Tensor& input,
               std::span<const Shape> in_shapes) {
    return forward_trace(network, input, in_shapes).output();
}

BackwardResult backward(std::span<const LayerParams> network, const ForwardTrace& trace,
                        const Tensor& output_grad) {
    if (trace.inputs.size() != network.size() + 1 || trace.preact.size() != network.size())
        throw usage_error("backward called without a matching forward trace");
    if (output_grad.size() != trace.output().size())
        throw usage_error("output gradient shape " + shape_str(output_grad.shape) +
                          " does not match forward output " +
                          shape_str(trace.output().shape));

    BackwardResult result;
    result.layers.resize(network.size());
    Tensor upstream = output_grad.reshaped(trace.output().shape);
    for (std::size_t ri = network.size(); ri-- > 0;) {
        const LayerParams& layer = network[ri];
        const Tensor& z = trace.preact[ri];
        const Tensor& y = trace.inputs[ri + 1];  // activation output (values)
        Tensor dz = upstream.reshaped(z.shape);
        for (std::size_t i = 0; i < dz.values.size(); ++i)
            dz.values[i] *= activate_grad_one(layer.activation, z.values[i], y.values[i]);

        LayerGrads& g = result.layers[ri];
        g.weights = Tensor::zeros(layer.weights.shape);
        g.bias = Tensor::zeros(layer.bias.shape);
        const Tensor& x = trace.inputs[ri];
        Tensor dx = Tensor::zeros(x.shape);
        switch (layer.kind) {
            case LayerKind::Linear: linear_backward(layer, x, dz, g, dx); break;
            case LayerKind::Conv2d: conv2d_backward(layer, x, dz, g, dx); break;
            case LayerKind::Deconv2d: deconv2d_backward(layer, x, dz, g, dx); break;
        }
        upstream = std::move(dx);
    }
    result.input_grad = std::move(upstream);
    return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate, long layer_index) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw usage_error("adam_step: parameter/gradient/state sizes differ");
    for (double gv : grads)
        if (!std::isfinite(gv))
            throw training_divergence(
                "non-finite gradient in layer " + std::to_string(layer_index), layer_index);
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double gv = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * gv;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * gv * gv;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
}

LayerParams init_params(LayerKind kind, const LayerHyper& hyper, Activation activation,
                        Rng& rng) {
    LayerParams layer;
    layer.kind = kind;
    layer.activation = activation;
    layer.hyper = hyper;
    std::size_t fan_in = 0;
    Shape wshape, bshape;
    switch (kind) {
        case LayerKind::Linear:
            fan_in = hyper.in_features;
            wshape = {hyper.out_features, hyper.in_features};
            bshape = {hyper.out_features};
            break;
        case LayerKind::Conv2d:
            fan_in = hyper.in_channels * hyper.kernel * hyper.kernel;
            wshape = {hyper.out_channels, hyper.in_channels, hyper.kernel, hyper.kernel};
            bshape = {hyper.out_channels};
            break;
        case LayerKind::Deconv2d:
            fan_in = hyper.in_channels * hyper.kernel * hyper.kernel;
            wshape = {hyper.in_channels, hyper.out_channels, hyper.kernel, hyper.kernel};
            bshape = {hyper.out_channels};
            break;
    }
    if (fan_in == 0) throw config_error("init_params: zero fan-in");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.weights = Tensor::zeros(wshape);
    for (double& w : layer.weights.values) w = rng.uniform(-bound, bound);
    layer.bias = Tensor::zeros(bshape);
    return layer;
}

std::size_t param_count(const LayerParams& layer) {
    return layer.weights.size() + layer.bias.size();
}

}  // namespace qdgan
