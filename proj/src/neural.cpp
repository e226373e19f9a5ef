#include "dynamo/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "dynamo/error.hpp"
#include "dynamo/rng.hpp"

namespace dynamo {

namespace {

void activate(Matrix& z, Activation act, double slope) {
  if (act == Activation::kTanh) {
    z = z.array().tanh();
  } else {
    z = z.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
  }
}

// Derivative of the activation evaluated from the pre-activation.
Matrix activation_derivative(const Matrix& z, Activation act, double slope) {
  if (act == Activation::kTanh) {
    return (1.0 - z.array().tanh().square()).matrix();
  }
  return z.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

}  // namespace

std::string to_string(Activation activation) {
  return activation == Activation::kTanh ? "tanh" : "leaky-relu";
}

Activation activation_from_string(const std::string& text) {
  if (text == "tanh") return Activation::kTanh;
  if (text == "leaky-relu") return Activation::kLeakyRelu;
  throw DomainError("unknown activation: " + text);
}

Mlp::Mlp(std::vector<int> layer_dims, Activation activation, double leaky_slope)
    : layer_dims_(std::move(layer_dims)), activation_(activation), leaky_slope_(leaky_slope) {
  if (layer_dims_.size() < 2) throw DomainError("network needs at least input and output dims");
  if (layer_dims_.back() != 1) throw DomainError("network output must be scalar");
  for (int dim : layer_dims_) {
    if (dim < 1) throw DomainError("layer dimensions must be positive");
  }
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    layers_.push_back({Matrix::Zero(layer_dims_[l + 1], layer_dims_[l]),
                       Vector::Zero(layer_dims_[l + 1])});
  }
  input_offset_ = Vector::Zero(layer_dims_.front());
  input_scale_ = Vector::Ones(layer_dims_.front());
}

Mlp Mlp::uniform_init(std::vector<int> layer_dims, Activation activation, std::uint64_t seed,
                      double leaky_slope) {
  Mlp net(std::move(layer_dims), activation, leaky_slope);
  Rng rng(seed);
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = rng.uniform(-bound, bound);
  }
  return net;
}

void Mlp::set_input_transform(Vector offset, Vector scale) {
  if (offset.size() != input_dim() || scale.size() != input_dim()) {
    throw DomainError("input transform dimension mismatch");
  }
  if ((scale.array() <= 0.0).any()) throw DomainError("input scale must be positive");
  input_offset_ = std::move(offset);
  input_scale_ = std::move(scale);
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

double Mlp::max_abs_parameter() const {
  double m = 0.0;
  for (const auto& layer : layers_) {
    if (layer.weight.size() > 0) m = std::max(m, layer.weight.cwiseAbs().maxCoeff());
    if (layer.bias.size() > 0) m = std::max(m, layer.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

void Mlp::clamp_parameters(double bound) {
  for (auto& layer : layers_) {
    layer.weight = layer.weight.cwiseMax(-bound).cwiseMin(bound);
    layer.bias = layer.bias.cwiseMax(-bound).cwiseMin(bound);
  }
}

void Mlp::check_input(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw DomainError("network input has dimension " + std::to_string(x.size()) + ", expected " +
                      std::to_string(input_dim()));
  }
}

Matrix Mlp::transform_inputs(const Matrix& xs) const {
  if (xs.cols() != input_dim()) throw DomainError("network input batch has wrong dimension");
  Matrix a = xs.transpose();
  a.colwise() -= input_offset_;
  a.array().colwise() /= input_scale_.array();
  return a;
}

double Mlp::forward(const Vector& x) const {
  check_input(x);
  Vector a = (x - input_offset_).cwiseQuotient(input_scale_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector z = layers_[l].weight * a + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      Matrix zm = z;
      activate(zm, activation_, leaky_slope_);
      a = zm;
    } else {
      a = z;
    }
  }
  return a[0];
}

Vector Mlp::forward_batch(const Matrix& xs) const {
  Matrix a = transform_inputs(xs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) activate(z, activation_, leaky_slope_);
    a = std::move(z);
  }
  return a.row(0).transpose();
}

Vector Mlp::grad_input(const Vector& x) const {
  check_input(x);
  std::vector<Vector> pre;  // pre-activations of hidden layers
  Vector a = (x - input_offset_).cwiseQuotient(input_scale_);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Vector z = layers_[l].weight * a + layers_[l].bias;
    pre.push_back(z);
    Matrix zm = z;
    activate(zm, activation_, leaky_slope_);
    a = zm;
  }
  Vector delta = layers_.back().weight.row(0).transpose();
  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    delta = delta.cwiseProduct(Vector(activation_derivative(pre[l], activation_, leaky_slope_)));
    delta = layers_[l].weight.transpose() * delta;
  }
  return delta.cwiseQuotient(input_scale_);
}

std::vector<DenseLayer> Mlp::parameter_gradient(const Matrix& xs, const Vector& dout,
                                                Vector* outputs) const {
  if (dout.size() != xs.rows()) throw DomainError("parameter_gradient: dout length mismatch");
  std::vector<Matrix> acts;  // inputs to each layer, d_l x n
  std::vector<Matrix> pre;
  acts.push_back(transform_inputs(xs));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weight * acts.back();
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      pre.push_back(z);
      activate(z, activation_, leaky_slope_);
      acts.push_back(std::move(z));
    } else {
      if (outputs) *outputs = z.row(0).transpose();
    }
  }
  std::vector<DenseLayer> grads(layers_.size());
  Matrix delta = dout.transpose();  // 1 x n
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads[l].weight = delta * acts[l].transpose();
    grads[l].bias = delta.rowwise().sum();
    if (l > 0) {
      delta = layers_[l].weight.transpose() * delta;
      delta.array() *= activation_derivative(pre[l - 1], activation_, leaky_slope_).array();
    }
  }
  return grads;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["layer_dims"] = layer_dims_;
  j["activation"] = to_string(activation_);
  j["leaky_slope"] = leaky_slope_;
  j["input_offset"] = std::vector<double>(input_offset_.data(), input_offset_.data() + input_offset_.size());
  j["input_scale"] = std::vector<double>(input_scale_.data(), input_scale_.data() + input_scale_.size());
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    j["layers"].push_back(
        {{"weight", w},
         {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
  }
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net(j.at("layer_dims").get<std::vector<int>>(),
          activation_from_string(j.at("activation").get<std::string>()),
          j.at("leaky_slope").get<double>());
  const auto& jl = j.at("layers");
  if (jl.size() != net.layers_.size()) throw Error("checkpoint layer count mismatch");
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    auto w = jl[l].at("weight").get<std::vector<double>>();
    auto b = jl[l].at("bias").get<std::vector<double>>();
    auto& layer = net.layers_[l];
    if (static_cast<Eigen::Index>(w.size()) != layer.weight.size() ||
        static_cast<Eigen::Index>(b.size()) != layer.bias.size()) {
      throw Error("checkpoint parameter shape mismatch");
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[k++];
    }
    layer.bias = Eigen::Map<Vector>(b.data(), layer.bias.size());
  }
  if (j.contains("input_offset")) {
    auto off = j.at("input_offset").get<std::vector<double>>();
    auto sc = j.at("input_scale").get<std::vector<double>>();
    net.set_input_transform(Eigen::Map<Vector>(off.data(), static_cast<Eigen::Index>(off.size())),
                            Eigen::Map<Vector>(sc.data(), static_cast<Eigen::Index>(sc.size())));
  }
  return net;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out << to_json().dump() << "\n";
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint: " + path.string());
  return from_json(nlohmann::json::parse(in));
}

bool Mlp::operator==(const Mlp& other) const {
  if (layer_dims_ != other.layer_dims_ || activation_ != other.activation_ ||
      leaky_slope_ != other.leaky_slope_ || input_offset_ != other.input_offset_ ||
      input_scale_ != other.input_scale_) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

AdamState AdamState::for_network(const Mlp& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const auto& layer : net.layers()) {
    s.first_moment.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                              Vector::Zero(layer.bias.size())});
  }
  s.second_moment = s.first_moment;
  return s;
}

void AdamState::apply(Mlp& net, const std::vector<DenseLayer>& gradient) {
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, first_moment[l].weight, second_moment[l].weight, gradient[l].weight);
    update(layers[l].bias, first_moment[l].bias, second_moment[l].bias, gradient[l].bias);
  }
}

double mean_squared_error(const Mlp& net, const Matrix& xs, const Vector& ys) {
  const Vector r = net.forward_batch(xs) - ys;
  return r.squaredNorm() / static_cast<double>(ys.size());
}

Mlp fit_surrogate(const OfflineDataset& ds, const SurrogateOptions& options,
                  std::vector<double>* mse_trace) {
  if (options.epochs < 1) throw PreconditionError("fit_surrogate: epochs must be >= 1");
  if (!(options.learning_rate > 0.0)) throw PreconditionError("fit_surrogate: lr must be > 0");
  if (options.batch_size < 0) throw PreconditionError("fit_surrogate: batch_size must be >= 0");

  std::vector<int> dims{ds.dim()};
  dims.insert(dims.end(), options.hidden.begin(), options.hidden.end());
  dims.push_back(1);
  Mlp net = Mlp::uniform_init(dims, Activation::kLeakyRelu, options.seed, options.leaky_slope);

  const Matrix& xs = ds.designs();
  const Vector& ys = ds.norm_scores();
  const Vector mean = xs.colwise().mean().transpose();
  Vector scale = ((xs.rowwise() - mean.transpose()).array().square().colwise().mean().sqrt())
                     .transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale[j] > 1e-12)) scale[j] = 1.0;
  }
  net.set_input_transform(mean, scale);

  AdamState adam = AdamState::for_network(net, options.learning_rate);
  Rng rng(derive_seed(options.seed, 1));
  const int n = ds.size();
  const int batch = options.batch_size == 0 ? n : std::min(options.batch_size, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  if (mse_trace) {
    mse_trace->clear();
    mse_trace->push_back(mean_squared_error(net, xs, ys));
  }
  Matrix bx(batch, ds.dim());
  Vector by(batch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    }
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);
      bx.resize(count, ds.dim());
      by.resize(count);
      for (int k = 0; k < count; ++k) {
        const int idx = order[static_cast<std::size_t>(start + k)];
        bx.row(k) = xs.row(idx);
        by[k] = ys[idx];
      }
      const Vector residual = net.forward_batch(bx) - by;
      const double loss = residual.squaredNorm() / count;
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError("surrogate loss became non-finite at epoch " +
                                    std::to_string(epoch));
      }
      const Vector dout = (2.0 / count) * residual;
      adam.apply(net, net.parameter_gradient(bx, dout));
    }
    if (mse_trace) {
      const double mse = mean_squared_error(net, xs, ys);
      if (!std::isfinite(mse)) throw TrainingDivergedError("surrogate MSE became non-finite");
      mse_trace->push_back(mse);
    }
  }
  return net;
}

Critic make_critic(int input_dim, const CriticArchitecture& arch, std::uint64_t seed) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(1);
  Critic critic{Mlp::uniform_init(dims, arch.activation, seed, arch.leaky_slope), arch.clip_bound};
  critic.net.clamp_parameters(arch.clip_bound);
  return critic;
}

Critic make_zero_critic(int input_dim, const CriticArchitecture& arch) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(1);
  return Critic{Mlp(dims, arch.activation, arch.leaky_slope), arch.clip_bound};
}

double critic_objective(const Critic& critic, const Matrix& real, const Vector& real_weights,
                        const Matrix& fake) {
  if (real_weights.size() != real.rows()) throw DomainError("critic: weight count mismatch");
  if (fake.rows() < 1) throw PreconditionError("critic: fake batch must be nonempty");
  return real_weights.dot(critic.net.forward_batch(real)) - critic.net.forward_batch(fake).mean();
}

CriticTrace train_critic(Critic& critic, const Matrix& real, const Vector& real_weights,
                         const Matrix& fake, const CriticOptions& options) {
  if (fake.rows() < 1) throw PreconditionError("train_critic: fake batch must be nonempty");
  if (!(options.learning_rate > 0.0)) throw PreconditionError("train_critic: lr must be > 0");
  if (real_weights.size() != real.rows()) throw DomainError("train_critic: weight count mismatch");
  if (options.max_steps < 0) throw PreconditionError("train_critic: max_steps must be >= 0");

  const Vector fake_dout = Vector::Constant(fake.rows(), -1.0 / static_cast<double>(fake.rows()));

  // W and dW/dtheta at the current parameters.
  auto evaluate = [&](std::vector<DenseLayer>& grad) {
    Vector real_out, fake_out;
    grad = critic.net.parameter_gradient(real, real_weights, &real_out);
    auto fake_grad = critic.net.parameter_gradient(fake, fake_dout, &fake_out);
    for (std::size_t l = 0; l < grad.size(); ++l) {
      grad[l].weight += fake_grad[l].weight;
      grad[l].bias += fake_grad[l].bias;
    }
    const double w = real_weights.dot(real_out) - fake_out.mean();
    if (!std::isfinite(w)) throw TrainingDivergedError("critic objective became non-finite");
    return w;
  };

  CriticTrace trace;
  std::vector<DenseLayer> grad;
  double w = evaluate(grad);
  trace.w.push_back(w);
  trace.best_w.push_back(w);
  for (int step = 0; step < options.max_steps; ++step) {
    auto& layers = critic.net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weight += options.learning_rate * grad[l].weight;
      layers[l].bias += options.learning_rate * grad[l].bias;
    }
    critic.net.clamp_parameters(critic.clip_bound);
    const double next = evaluate(grad);
    ++trace.steps;
    trace.w.push_back(next);
    trace.best_w.push_back(std::max(trace.best_w.back(), next));
    trace.max_abs_param.push_back(critic.net.max_abs_parameter());
    const double delta = std::abs(next - w);
    w = next;
    if (delta < options.tolerance) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace dynamo
