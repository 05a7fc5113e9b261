#include "tracked/nn/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tracked::nn {

namespace {

Matrix sigmoid(const Matrix& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix tanh_of(const Matrix& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

// Scales row r of m by column vector d (elementwise broadcast over columns).
Matrix scale_rows(const Matrix& m, const Matrix& d) {
  return d.col(0).asDiagonal() * m;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim != kInputDim) throw std::invalid_argument("model config: input_dim must be 12");
  if (output_dim != kOutputDim) throw std::invalid_argument("model config: output_dim must be 2");
  if (hidden_dim < 1 || window_len < 1 || attention_dim < 1) {
    throw std::invalid_argument("model config: dimensions must be >= 1");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const int H = cfg.hidden_dim, I = cfg.input_dim, A = cfg.attention_dim, O = cfg.output_dim;
  ModelParams p;
  p.lstm.W = Matrix::Zero(4 * H, I);
  p.lstm.U = Matrix::Zero(4 * H, H);
  p.lstm.b = Matrix::Zero(4 * H, 1);
  p.lstm.p_i = Matrix::Zero(H, 1);
  p.lstm.p_f = Matrix::Zero(H, 1);
  p.lstm.p_o = Matrix::Zero(H, 1);
  p.attention.W_a = Matrix::Zero(A, H);
  p.attention.b_a = Matrix::Zero(A, 1);
  p.attention.v = Matrix::Zero(A, 1);
  p.output.W_y = Matrix::Zero(O, 2 * H);
  p.output.b_y = Matrix::Zero(O, 1);
  return p;
}

ModelParams ModelParams::random(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    }
  };
  const double lstm_fan_in = cfg.input_dim + cfg.hidden_dim;
  fill(p.lstm.W, lstm_fan_in);
  fill(p.lstm.U, lstm_fan_in);
  fill(p.lstm.b, lstm_fan_in);
  fill(p.lstm.p_i, lstm_fan_in);
  fill(p.lstm.p_f, lstm_fan_in);
  fill(p.lstm.p_o, lstm_fan_in);
  p.lstm.b.block(cfg.hidden_dim, 0, cfg.hidden_dim, 1).setConstant(1.0);
  fill(p.attention.W_a, cfg.hidden_dim);
  fill(p.attention.b_a, cfg.hidden_dim);
  fill(p.attention.v, cfg.attention_dim);
  fill(p.output.W_y, 2.0 * cfg.hidden_dim);
  fill(p.output.b_y, 2.0 * cfg.hidden_dim);
  return p;
}

std::vector<Matrix*> ModelParams::tensors() {
  return {&lstm.W, &lstm.U, &lstm.b, &lstm.p_i, &lstm.p_f, &lstm.p_o,
          &attention.W_a, &attention.b_a, &attention.v, &output.W_y, &output.b_y};
}

std::vector<const Matrix*> ModelParams::tensors() const {
  return {&lstm.W, &lstm.U, &lstm.b, &lstm.p_i, &lstm.p_f, &lstm.p_o,
          &attention.W_a, &attention.b_a, &attention.v, &output.W_y, &output.b_y};
}

const std::vector<std::string>& ModelParams::tensor_names() {
  static const std::vector<std::string> kNames = {
      "lstm.W", "lstm.U", "lstm.b", "lstm.p_i", "lstm.p_f", "lstm.p_o",
      "attention.W_a", "attention.b_a", "attention.v", "output.W_y", "output.b_y"};
  return kNames;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const Matrix* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

void ModelParams::set_zero() {
  for (Matrix* t : tensors()) t->setZero();
}

CellStep lstm_cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                           const LstmParams& p) {
  const Eigen::Index H = p.U.cols();
  if (x.rows() != p.W.cols() || h_prev.rows() != H || c_prev.rows() != H ||
      x.cols() != h_prev.cols() || x.cols() != c_prev.cols()) {
    throw std::invalid_argument("lstm_cell_forward: shape mismatch");
  }
  Matrix z = p.W * x + p.U * h_prev;
  z.colwise() += p.b.col(0);

  CellStep s;
  s.i = sigmoid(z.topRows(H) + scale_rows(c_prev, p.p_i));
  s.f = sigmoid(z.middleRows(H, H) + scale_rows(c_prev, p.p_f));
  s.g = tanh_of(z.middleRows(2 * H, H));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.o = sigmoid(z.bottomRows(H) + scale_rows(s.c, p.p_o));
  s.tanh_c = tanh_of(s.c);
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

AttentionResult attention_context(std::span<const Matrix> hidden, const AttentionParams& p) {
  if (hidden.empty()) throw std::invalid_argument("attention_context: no hidden states");
  const Eigen::Index T = static_cast<Eigen::Index>(hidden.size());
  const Eigen::Index B = hidden.front().cols();

  AttentionResult r;
  r.scores.resize(T, B);
  r.activations.reserve(hidden.size());
  for (Eigen::Index t = 0; t < T; ++t) {
    Matrix pre = p.W_a * hidden[t];
    pre.colwise() += p.b_a.col(0);
    r.activations.push_back(tanh_of(pre));
    r.scores.row(t) = p.v.transpose() * r.activations.back();
  }
  // Column-wise softmax over time.
  r.alphas.resize(T, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double mx = r.scores.col(b).maxCoeff();
    Eigen::VectorXd e = (r.scores.col(b).array() - mx).exp();
    r.alphas.col(b) = e / e.sum();
  }
  r.context = Matrix::Zero(hidden.front().rows(), B);
  for (Eigen::Index t = 0; t < T; ++t) {
    r.context += hidden[t] * r.alphas.row(t).asDiagonal();
  }
  return r;
}

ForwardCache forward(const std::vector<Matrix>& inputs, const ModelParams& params) {
  if (inputs.empty()) throw std::invalid_argument("forward: empty window");
  const Eigen::Index H = params.lstm.U.cols();
  const Eigen::Index B = inputs.front().cols();

  ForwardCache cache;
  cache.inputs = inputs;
  cache.steps.reserve(inputs.size());
  Matrix h = Matrix::Zero(H, B);
  Matrix c = Matrix::Zero(H, B);
  std::vector<Matrix> hidden;
  hidden.reserve(inputs.size());
  for (const Matrix& x : inputs) {
    cache.steps.push_back(lstm_cell_forward(x, h, c, params.lstm));
    h = cache.steps.back().h;
    c = cache.steps.back().c;
    hidden.push_back(h);
  }
  cache.attention = attention_context(hidden, params.attention);
  cache.features.resize(2 * H, B);
  cache.features.topRows(H) = cache.attention.context;
  cache.features.bottomRows(H) = h;
  cache.y = params.output.W_y * cache.features;
  cache.y.colwise() += params.output.b_y.col(0);
  return cache;
}

double mse_loss(const Matrix& y, const Matrix& targets) {
  return (y - targets).squaredNorm() / static_cast<double>(y.size());
}

void backward(const ForwardCache& cache, const Matrix& targets, const ModelParams& params,
              ModelParams& grads) {
  const auto& lp = params.lstm;
  const Eigen::Index H = lp.U.cols();
  const Eigen::Index B = cache.y.cols();
  const std::size_t T = cache.steps.size();

  if (grads.lstm.W.rows() != lp.W.rows() || grads.lstm.W.cols() != lp.W.cols()) {
    grads = params;
  }
  grads.set_zero();

  // Read-out.
  const Matrix dy = 2.0 * (cache.y - targets) / static_cast<double>(cache.y.size());
  grads.output.W_y = dy * cache.features.transpose();
  grads.output.b_y = dy.rowwise().sum();
  const Matrix dfeatures = params.output.W_y.transpose() * dy;
  const Matrix dctx = dfeatures.topRows(H);

  std::vector<Matrix> dh(T, Matrix::Zero(H, B));
  dh[T - 1] += dfeatures.bottomRows(H);

  // Attention: context = sum_t alpha_t h_t, alpha = softmax(scores).
  const auto& att = cache.attention;
  Matrix dalpha(static_cast<Eigen::Index>(T), B);
  for (std::size_t t = 0; t < T; ++t) {
    const Matrix& h_t = cache.steps[t].h;
    dh[t] += dctx * att.alphas.row(static_cast<Eigen::Index>(t)).asDiagonal();
    dalpha.row(static_cast<Eigen::Index>(t)) = h_t.cwiseProduct(dctx).colwise().sum();
  }
  Matrix dscores(static_cast<Eigen::Index>(T), B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double weighted = att.alphas.col(b).dot(dalpha.col(b));
    dscores.col(b) = att.alphas.col(b).cwiseProduct(dalpha.col(b).array().matrix() -
                                                    Eigen::VectorXd::Constant(dalpha.rows(), weighted));
  }
  for (std::size_t t = 0; t < T; ++t) {
    const Matrix& act = att.activations[t];
    const Eigen::RowVectorXd ds = dscores.row(static_cast<Eigen::Index>(t));
    grads.attention.v += act * ds.transpose();
    const Matrix dact = params.attention.v * ds;
    const Matrix dpre = dact.cwiseProduct((1.0 - act.array().square()).matrix());
    grads.attention.W_a += dpre * cache.steps[t].h.transpose();
    grads.attention.b_a += dpre.rowwise().sum();
    dh[t] += params.attention.W_a.transpose() * dpre;
  }

  // Back-propagation through time.
  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  Matrix dz(4 * H, B);
  const Matrix zero_state = Matrix::Zero(H, B);
  for (std::size_t k = T; k-- > 0;) {
    const CellStep& s = cache.steps[k];
    const Matrix& c_prev = k > 0 ? cache.steps[k - 1].c : zero_state;
    const Matrix& h_prev = k > 0 ? cache.steps[k - 1].h : zero_state;

    const Matrix dh_total = dh[k] + dh_next;
    const Matrix d_o = dh_total.cwiseProduct(s.tanh_c);
    const Matrix dz_o = d_o.cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));
    Matrix dc = dc_next + dh_total.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
    dc += scale_rows(dz_o, lp.p_o);
    grads.lstm.p_o += dz_o.cwiseProduct(s.c).rowwise().sum();

    const Matrix dz_i = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
    const Matrix dz_f = dc.cwiseProduct(c_prev).cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
    const Matrix dz_g = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());

    grads.lstm.p_i += dz_i.cwiseProduct(c_prev).rowwise().sum();
    grads.lstm.p_f += dz_f.cwiseProduct(c_prev).rowwise().sum();

    dz.topRows(H) = dz_i;
    dz.middleRows(H, H) = dz_f;
    dz.middleRows(2 * H, H) = dz_g;
    dz.bottomRows(H) = dz_o;

    grads.lstm.W += dz * cache.inputs[k].transpose();
    grads.lstm.U += dz * h_prev.transpose();
    grads.lstm.b += dz.rowwise().sum();

    dh_next = lp.U.transpose() * dz;
    dc_next = dc.cwiseProduct(s.f) + scale_rows(dz_i, lp.p_i) + scale_rows(dz_f, lp.p_f);
  }
}

double loss_and_gradients(const std::vector<Matrix>& inputs, const Matrix& targets,
                          const ModelParams& params, ModelParams& grads) {
  const ForwardCache cache = forward(inputs, params);
  backward(cache, targets, params, grads);
  return mse_loss(cache.y, targets);
}

}  // namespace tracked::nn
