#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tracked::nn {

using Matrix = Eigen::MatrixXd;

inline constexpr int kInputDim = 12;
inline constexpr int kOutputDim = 2;

struct ModelConfig {
  int input_dim = kInputDim;
  int hidden_dim = 32;
  int window_len = 10;
  int output_dim = kOutputDim;
  int attention_dim = 16;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Peephole LSTM weights. Gate blocks are stacked in the order
/// input, forget, candidate, output (rows [0,H), [H,2H), [2H,3H), [3H,4H)).
/// Peepholes are diagonal: the input and forget gates read the previous cell
/// state, the output gate reads the freshly updated one.
struct LstmParams {
  Matrix W;    // 4H x I
  Matrix U;    // 4H x H
  Matrix b;    // 4H x 1
  Matrix p_i;  // H x 1
  Matrix p_f;  // H x 1
  Matrix p_o;  // H x 1
};

/// Additive attention: e_t = v^T tanh(W_a h_t + b_a).
struct AttentionParams {
  Matrix W_a;  // A x H
  Matrix b_a;  // A x 1
  Matrix v;    // A x 1
};

/// Affine read-out on [context; h_last].
struct OutputParams {
  Matrix W_y;  // O x 2H
  Matrix b_y;  // O x 1
};

struct ModelParams {
  LstmParams lstm;
  AttentionParams attention;
  OutputParams output;

  static ModelParams zeros(const ModelConfig& cfg);
  /// Uniform in +-1/sqrt(fan_in); forget-gate bias starts at +1.
  static ModelParams random(const ModelConfig& cfg, std::uint64_t seed);

  /// Every tensor, in a fixed order that the weight file also uses.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  static const std::vector<std::string>& tensor_names();

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
};

/// One LSTM step for a batch (one sample per column).
struct CellStep {
  Matrix i, f, g, o;  // gate activations, H x B
  Matrix c;           // new cell state
  Matrix tanh_c;
  Matrix h;  // new hidden state
};

CellStep lstm_cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                           const LstmParams& params);

struct AttentionResult {
  Matrix context;                   // H x B
  Matrix alphas;                    // T x B, each column sums to 1
  Matrix scores;                    // T x B
  std::vector<Matrix> activations;  // per step, A x B
};

AttentionResult attention_context(std::span<const Matrix> hidden_states, const AttentionParams& params);

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // per step, I x B
  std::vector<CellStep> steps;
  AttentionResult attention;
  Matrix features;  // [context; h_last], 2H x B
  Matrix y;         // O x B, normalised outputs
};

/// Runs the network on normalised inputs, one I x B matrix per time step.
ForwardCache forward(const std::vector<Matrix>& inputs, const ModelParams& params);

/// Mean squared error over all outputs and batch columns.
double mse_loss(const Matrix& y, const Matrix& targets);

/// Exact gradients of mse_loss w.r.t. every parameter (BPTT through the
/// attention and all three peephole paths). `grads` is overwritten.
void backward(const ForwardCache& cache, const Matrix& targets, const ModelParams& params,
              ModelParams& grads);

/// Forward + backward; returns the loss.
double loss_and_gradients(const std::vector<Matrix>& inputs, const Matrix& targets,
                          const ModelParams& params, ModelParams& grads);

}  // namespace tracked::nn
