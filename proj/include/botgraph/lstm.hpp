#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "botgraph/features.hpp"
#include "botgraph/timeseries.hpp"
#include "botgraph/windowing.hpp"

namespace botgraph {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

struct TensorRef {
  const char* name;
  double* data;
  size_t size;
};

// Full parameter set of the recurrent classifier: per-gate input weights W
// (hidden x input), recurrent weights U (hidden x hidden), gate biases,
// and the sigmoid output head reading the last hidden state.
struct LstmParams {
  int input_dim = 10;
  int hidden_dim = 64;
  Mat wi, wf, wo, wc;                  // gate input weights
  Mat ui, uf, uo, uc;                  // gate recurrent weights
  std::vector<double> bi, bf, bo, bc;  // gate biases
  std::vector<double> w_out;           // output weights (hidden)
  double b_out = 0.0;

  static LstmParams zeros(int input_dim, int hidden_dim);

  // Stable tensor enumeration used by init, the optimizer, serialization,
  // and the gradient check.
  std::vector<TensorRef> tensors();
};

// Weights ~ uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)); forget-gate bias 1,
// other biases 0. Deterministic given the seed.
LstmParams init_params(uint64_t seed, int input_dim = kFeatureCount, int hidden_dim = 64);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double malicious_weight = 6.0;  // loss weight on positive samples
  int batch_size = 32;
  uint64_t seed = 0;

  void validate() const;
};

struct Prediction {
  double score = 0.0;  // sigmoid output in [0,1]
  bool label_at(double threshold) const { return score >= threshold; }
};

// Cached activations of one forward pass, consumed by backward().
struct ForwardCache {
  int steps = 0;
  std::vector<std::vector<double>> i, f, o, g, c, tanh_c, h;
  double score = 0.0;
};

// Standard LSTM cell (sigmoid gates, tanh candidate), h0 = c0 = 0, state
// reset per sample; prediction = sigmoid(w_out . h_T + b_out). Non-finite
// input raises InputError.
Prediction forward(const LstmParams& p, std::span<const FeatureVector> rows);
Prediction forward(const LstmParams& p, std::span<const FeatureVector> rows,
                   ForwardCache& cache);

// Mean over samples of w_i * (score_i - y_i)^2 with w_i = malicious_weight
// for positives, 1 otherwise.
double weighted_mse(std::span<const double> scores, std::span<const uint8_t> labels,
                    double malicious_weight);

// Accumulates d(loss)/d(params) into grad for one sample, given
// dscore = d(loss)/d(score).
void backward(const LstmParams& p, std::span<const FeatureVector> rows,
              const ForwardCache& cache, double dscore, LstmParams& grad);

struct TrainResult {
  LstmParams params;
  std::vector<double> loss_history;  // one entry per epoch
};

// Mini-batch RMSProp (v <- rho*v + (1-rho)*g^2; step = lr*g/(sqrt(v)+eps))
// through full backpropagation through time. Single-threaded and
// deterministic: same seed and data give bit-identical parameters.
TrainResult train(const std::vector<WindowSample>& samples, const TrainConfig& cfg);

struct GradCheckReport {
  struct TensorError {
    std::string name;
    double max_rel_error = 0.0;
  };
  std::vector<TensorError> per_tensor;
  double max_rel_error = 0.0;
};

// Compares analytic gradients against central finite differences for every
// parameter, including the recurrent U matrices. Relative error uses
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport gradient_check(const LstmParams& params, const WindowSample& sample,
                               double malicious_weight, double h = 1e-5);

// Extraction/windowing settings recorded into the model file so `predict`
// can rebuild identical features without re-specifying flags.
struct PipelineMeta {
  WindowConfig window;
  GraphMode mode = GraphMode::weighted;
  ConvergenceConfig conv;
  int slice_len = 5;
  int slice_overlap = 2;
};

struct LoadedModel {
  LstmParams params;
  TrainConfig train_config;
  PipelineMeta pipeline;
};

// Self-describing versioned JSON; tensor values round-trip exactly
// (shortest-representation decimal serialization).
void save_model(const LstmParams& params, const TrainConfig& cfg,
                const PipelineMeta& meta, const std::string& path);
LoadedModel load_model(const std::string& path);

}  // namespace botgraph
