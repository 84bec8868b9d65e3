#include "argos/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace argos::models {

namespace {

void init_layer(DenseLayer& layer, std::size_t in, std::size_t out, Activation activation, Rng& rng) {
  layer.activation = activation;
  layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
  // He-uniform for ReLU, Glorot-uniform otherwise.
  const double limit = activation == Activation::Relu ? std::sqrt(6.0 / static_cast<double>(in))
                                                      : std::sqrt(6.0 / static_cast<double>(in + out));
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = rng.uniform(-limit, limit);
}

// Multiplies `delta` in place by the activation derivative.
void apply_derivative(Activation activation, const FeatureMatrix& pre, const FeatureMatrix& post,
                      FeatureMatrix& delta) {
  switch (activation) {
    case Activation::Linear:
      return;
    case Activation::Relu:
      delta = (pre.array() > 0.0).select(delta, 0.0);
      return;
    case Activation::Sigmoid:
      delta.array() *= post.array() * (1.0 - post.array());
      return;
  }
}

struct ForwardTrace {
  std::vector<FeatureMatrix> pre;   // per layer, before activation
  std::vector<FeatureMatrix> post;  // per layer, after activation
};

// Runs layers [first, last) from `input`, recording intermediates.
void trace_layers(const std::vector<DenseLayer>& layers, std::size_t first, std::size_t last,
                  const FeatureMatrix& input, ForwardTrace& trace) {
  const FeatureMatrix* current = &input;
  for (std::size_t l = first; l < last; ++l) {
    FeatureMatrix pre = layers[l].weight * (*current);
    pre.colwise() += layers[l].bias;
    FeatureMatrix post = pre;
    activate(layers[l].activation, post);
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(std::move(post));
    current = &trace.post.back();
  }
}

// Back-propagates `delta` (already multiplied by the activation derivative of
// layer last-1) through layers [first, last). Returns dLoss/d(input of layer first).
FeatureMatrix backprop_layers(const std::vector<DenseLayer>& layers, std::size_t first, std::size_t last,
                              const FeatureMatrix& input, const ForwardTrace& trace, FeatureMatrix delta,
                              std::vector<LayerGradient>& gradient) {
  for (std::size_t l = last; l-- > first;) {
    const std::size_t t = l - first;
    const FeatureMatrix& below = t == 0 ? input : trace.post[t - 1];
    gradient[l].weight = delta * below.transpose();
    gradient[l].bias = delta.rowwise().sum();
    FeatureMatrix next = layers[l].weight.transpose() * delta;
    if (t > 0) apply_derivative(layers[l - 1].activation, trace.pre[t - 1], trace.post[t - 1], next);
    delta = std::move(next);
  }
  return delta;
}

std::size_t code_layer_index(const DenseNetwork& net) {
  const std::size_t count = net.layers().size();
  if (count < 2 || count % 2 != 0) throw std::invalid_argument("VAE needs a symmetric encoder/decoder stack");
  return count / 2 - 1;
}

}  // namespace

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].inputs() != layers_[l - 1].outputs()) throw std::invalid_argument("layer widths do not chain");
  }
}

DenseNetwork DenseNetwork::autoencoder(std::size_t input_width, std::size_t hidden, std::size_t latent, Rng& rng) {
  std::vector<DenseLayer> layers(4);
  init_layer(layers[0], input_width, hidden, Activation::Relu, rng);
  init_layer(layers[1], hidden, latent, Activation::Linear, rng);
  init_layer(layers[2], latent, hidden, Activation::Relu, rng);
  init_layer(layers[3], hidden, input_width, Activation::Sigmoid, rng);
  return DenseNetwork(std::move(layers));
}

std::size_t DenseNetwork::input_width() const { return layers_.empty() ? 0 : layers_.front().inputs(); }
std::size_t DenseNetwork::output_width() const { return layers_.empty() ? 0 : layers_.back().outputs(); }
std::size_t DenseNetwork::latent_width() const {
  return layers_.size() < 2 ? 0 : layers_[layers_.size() / 2 - 1].outputs();
}

void activate(Activation activation, FeatureMatrix& values) {
  switch (activation) {
    case Activation::Linear:
      return;
    case Activation::Relu:
      values = values.cwiseMax(0.0);
      return;
    case Activation::Sigmoid:
      values = (1.0 + (-values.array()).exp()).inverse().matrix();
      return;
  }
}

FeatureMatrix apply_layer(const DenseLayer& layer, const FeatureMatrix& input) {
  FeatureMatrix out = layer.weight * input;
  out.colwise() += layer.bias;
  activate(layer.activation, out);
  return out;
}

FeatureMatrix DenseNetwork::forward(const FeatureMatrix& batch) const {
  FeatureMatrix current = batch;
  for (const auto& layer : layers_) current = apply_layer(layer, current);
  return current;
}

Eigen::VectorXd DenseNetwork::forward(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> input(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd current = input;
  for (const auto& layer : layers_) {
    Eigen::VectorXd next = layer.weight * current + layer.bias;
    switch (layer.activation) {
      case Activation::Linear:
        break;
      case Activation::Relu:
        next = next.cwiseMax(0.0);
        break;
      case Activation::Sigmoid:
        next = (1.0 + (-next.array()).exp()).inverse().matrix();
        break;
    }
    current = std::move(next);
  }
  return current;
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.parameter_count();
  return n;
}

double DenseNetwork::parameter(std::size_t index) const {
  for (const auto& layer : layers_) {
    const auto w = static_cast<std::size_t>(layer.weight.size());
    if (index < w) return layer.weight.data()[index];
    index -= w;
    const auto b = static_cast<std::size_t>(layer.bias.size());
    if (index < b) return layer.bias.data()[index];
    index -= b;
  }
  throw std::out_of_range("parameter index");
}

void DenseNetwork::set_parameter(std::size_t index, double value) {
  for (auto& layer : layers_) {
    const auto w = static_cast<std::size_t>(layer.weight.size());
    if (index < w) {
      layer.weight.data()[index] = value;
      return;
    }
    index -= w;
    const auto b = static_cast<std::size_t>(layer.bias.size());
    if (index < b) {
      layer.bias.data()[index] = value;
      return;
    }
    index -= b;
  }
  throw std::out_of_range("parameter index");
}

bool DenseNetwork::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

void DenseNetwork::round_to_float() {
  for (auto& layer : layers_) {
    layer.weight = layer.weight.cast<float>().cast<double>();
    layer.bias = layer.bias.cast<float>().cast<double>();
  }
}

double mse(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw std::invalid_argument("mse: length mismatch");
  if (x.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double kl_gaussian(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw std::invalid_argument("kl_gaussian: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double lv = std::clamp(logvar[i], kLogVarMin, kLogVarMax);
    sum += -0.5 * (1.0 + lv - mu[i] * mu[i] - std::exp(lv));
  }
  // exp(lv) >= 1 + lv makes every term nonnegative; guard rounding below zero.
  return std::max(sum, 0.0);
}

LossValue reconstruction_loss(const DenseNetwork& net, const FeatureMatrix& input, const FeatureMatrix& target,
                              std::vector<LayerGradient>* gradient) {
  const auto& layers = net.layers();
  ForwardTrace trace;
  trace_layers(layers, 0, layers.size(), input, trace);
  const FeatureMatrix diff = trace.post.back() - target;
  const double scale = 1.0 / static_cast<double>(diff.size());

  LossValue loss;
  loss.reconstruction = diff.squaredNorm() * scale;
  loss.total = loss.reconstruction;
  if (gradient) {
    gradient->resize(layers.size());
    FeatureMatrix delta = 2.0 * scale * diff;
    apply_derivative(layers.back().activation, trace.pre.back(), trace.post.back(), delta);
    backprop_layers(layers, 0, layers.size(), input, trace, std::move(delta), *gradient);
  }
  return loss;
}

LossValue vae_loss(const DenseNetwork& net, const VaeHead& head, const FeatureMatrix& input,
                   const FeatureMatrix& eta, double beta, std::vector<LayerGradient>* net_gradient,
                   LayerGradient* head_gradient) {
  const auto& layers = net.layers();
  const std::size_t code = code_layer_index(net);
  const double batch = static_cast<double>(input.cols());

  ForwardTrace encoder;
  trace_layers(layers, 0, code, input, encoder);
  const FeatureMatrix& h = code == 0 ? input : encoder.post.back();

  FeatureMatrix mu = layers[code].weight * h;
  mu.colwise() += layers[code].bias;
  FeatureMatrix logvar_raw = head.logvar.weight * h;
  logvar_raw.colwise() += head.logvar.bias;
  const FeatureMatrix logvar = logvar_raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  const FeatureMatrix sigma = (0.5 * logvar.array()).exp().matrix();
  const FeatureMatrix z = mu + sigma.cwiseProduct(eta);

  ForwardTrace decoder;
  trace_layers(layers, code + 1, layers.size(), z, decoder);
  const FeatureMatrix diff = decoder.post.back() - input;
  const double scale = 1.0 / static_cast<double>(diff.size());

  LossValue loss;
  loss.reconstruction = diff.squaredNorm() * scale;
  loss.kl = (-0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp())).sum() / batch;
  loss.total = loss.reconstruction + beta * loss.kl;

  if (net_gradient) {
    net_gradient->resize(layers.size());
    FeatureMatrix delta = 2.0 * scale * diff;
    apply_derivative(layers.back().activation, decoder.pre.back(), decoder.post.back(), delta);
    const FeatureMatrix d_z = backprop_layers(layers, code + 1, layers.size(), z, decoder, std::move(delta),
                                              *net_gradient);

    const FeatureMatrix d_mu = d_z + (beta / batch) * mu;
    const FeatureMatrix in_range =
        ((logvar_raw.array() > kLogVarMin) && (logvar_raw.array() < kLogVarMax)).cast<double>().matrix();
    const FeatureMatrix d_logvar =
        ((0.5 * d_z.array() * eta.array() * sigma.array()) + (0.5 * beta / batch) * (logvar.array().exp() - 1.0))
            .matrix()
            .cwiseProduct(in_range);

    (*net_gradient)[code].weight = d_mu * h.transpose();
    (*net_gradient)[code].bias = d_mu.rowwise().sum();
    if (head_gradient) {
      head_gradient->weight = d_logvar * h.transpose();
      head_gradient->bias = d_logvar.rowwise().sum();
    }
    if (code > 0) {
      FeatureMatrix d_h = layers[code].weight.transpose() * d_mu + head.logvar.weight.transpose() * d_logvar;
      apply_derivative(layers[code - 1].activation, encoder.pre.back(), encoder.post.back(), d_h);
      backprop_layers(layers, 0, code, input, encoder, std::move(d_h), *net_gradient);
    }
  }
  return loss;
}

}  // namespace argos::models
