#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "dynamo/dataset.hpp"

namespace dynamo {

enum class Activation { kLeakyRelu, kTanh };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& text);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Fully connected network with a scalar output. Hidden layers apply the
// activation, the output layer is linear. An optional fixed affine input
// transform z = (x - offset) / scale precedes the first layer; it is not a
// trainable parameter.
class Mlp {
 public:
  Mlp() = default;

  // All parameters zero. layer_dims = {input, hidden..., 1}.
  Mlp(std::vector<int> layer_dims, Activation activation, double leaky_slope = 0.01);

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp uniform_init(std::vector<int> layer_dims, Activation activation, std::uint64_t seed,
                          double leaky_slope = 0.01);

  int input_dim() const { return layer_dims_.front(); }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  Activation activation() const { return activation_; }
  double leaky_slope() const { return leaky_slope_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void set_input_transform(Vector offset, Vector scale);
  const Vector& input_offset() const { return input_offset_; }
  const Vector& input_scale() const { return input_scale_; }

  std::size_t parameter_count() const;
  double max_abs_parameter() const;
  void clamp_parameters(double bound);

  double forward(const Vector& x) const;
  // One output per row of xs.
  Vector forward_batch(const Matrix& xs) const;

  // d forward(x) / dx by reverse mode.
  Vector grad_input(const Vector& x) const;

  // Gradient w.r.t. parameters of sum_i dout[i] * forward(xs.row(i)).
  // Writes the forward outputs into `outputs` when given.
  std::vector<DenseLayer> parameter_gradient(const Matrix& xs, const Vector& dout,
                                             Vector* outputs = nullptr) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

  bool operator==(const Mlp& other) const;

 private:
  void check_input(const Vector& x) const;
  Matrix transform_inputs(const Matrix& xs) const;  // returns d x n

  std::vector<int> layer_dims_;
  Activation activation_ = Activation::kLeakyRelu;
  double leaky_slope_ = 0.01;
  std::vector<DenseLayer> layers_;
  Vector input_offset_;
  Vector input_scale_;
};

struct AdamState {
  long step = 0;
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const Mlp& net, double learning_rate);

  // Descent step: params -= lr * mhat / (sqrt(vhat) + eps).
  void apply(Mlp& net, const std::vector<DenseLayer>& gradient);
};

struct SurrogateOptions {
  std::vector<int> hidden = {64, 64};
  int epochs = 100;
  double learning_rate = 3e-4;
  // 0 means full batch.
  int batch_size = 32;
  std::uint64_t seed = 0;
  double leaky_slope = 0.01;
};

// Mean squared error regression of normalized scores on designs. Inputs are
// standardized with the dataset's per-dimension mean and std. When
// `mse_trace` is given it receives the full-data MSE before training and
// after every epoch.
Mlp fit_surrogate(const OfflineDataset& ds, const SurrogateOptions& options,
                  std::vector<double>* mse_trace = nullptr);

double mean_squared_error(const Mlp& net, const Matrix& xs, const Vector& ys);

// Wasserstein source critic with weight clipping as the Lipschitz proxy.
struct Critic {
  Mlp net;
  double clip_bound = 0.01;

  double operator()(const Vector& x) const { return net.forward(x); }
};

struct CriticArchitecture {
  std::vector<int> hidden = {32, 32};
  Activation activation = Activation::kLeakyRelu;
  double clip_bound = 0.01;
  double leaky_slope = 0.2;
};

// Uniform fan-in init, then clamped into the clip box so the Lipschitz proxy
// holds before the first training step too.
Critic make_critic(int input_dim, const CriticArchitecture& arch, std::uint64_t seed);
Critic make_zero_critic(int input_dim, const CriticArchitecture& arch);

struct CriticOptions {
  double learning_rate = 0.01;
  double tolerance = 1e-6;
  int max_steps = 200;
};

struct CriticTrace {
  std::vector<double> w;           // W at the initial parameters and after every step
  std::vector<double> best_w;      // running max of w
  std::vector<double> max_abs_param;  // after every step
  int steps = 0;
  bool converged = false;
};

// W = sum_i real_weights[i] c(real_i) - mean_j c(fake_j).
double critic_objective(const Critic& critic, const Matrix& real, const Vector& real_weights,
                        const Matrix& fake);

// Gradient ascent on W followed by clamping every parameter to
// [-clip_bound, clip_bound]. Stops when |dW| < tolerance or after max_steps.
CriticTrace train_critic(Critic& critic, const Matrix& real, const Vector& real_weights,
                         const Matrix& fake, const CriticOptions& options);

}  // namespace dynamo
