#pragma once

// Loss/gradient kernels for the two learners. Each kernel has a plain serial
// reference and an OpenMP version. The OpenMP version sums rows in fixed
// chunks and reduces the chunk partials serially in chunk order, so its
// result is bit-identical for any thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace ahmkit::kernels {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Rows per partial sum in the parallel kernels.
inline constexpr std::size_t kChunkRows = 32;

double sigmoid(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

/// Weighted, L2-regularized binary cross-entropy for one logistic head:
///   L = (1/n) Σ s_i [softplus(z_i) − y_i z_i] + (λ / 2n) ‖w‖²,  z_i = x_i·w + b.
/// Writes ∂L/∂w into `grad_w` and returns L; ∂L/∂b goes to `grad_b`.
struct LrProblem {
  const Matrix& x;
  std::span<const double> y;             // 0/1 targets
  std::span<const double> sample_weight;  // s_i
  double lambda = 1.0;
};

double lr_loss_grad_serial(const LrProblem& p, std::span<const double> w, double b,
                           std::span<double> grad_w, double& grad_b);
double lr_loss_grad_parallel(const LrProblem& p, std::span<const double> w, double b,
                             std::span<double> grad_w, double& grad_b);

/// One hidden ReLU layer and K sigmoid outputs. Flat parameter layout:
/// W1 (H×D, row-major), b1 (H), W2 (K×H, row-major), b2 (K).
struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;

  std::size_t parameter_count() const { return hidden * inputs + hidden + outputs * hidden + outputs; }
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden * inputs; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + outputs * hidden; }
};

/// Mean over rows of the summed per-output binary cross-entropy:
///   L = (1/n) Σ_i Σ_k [softplus(z_ik) − y_ik z_ik].
/// `y` is n×K row-major.
double mlp_loss_grad_serial(const MlpShape& shape, const Matrix& x, const Matrix& y,
                            std::span<const double> params, std::span<double> grad);
double mlp_loss_grad_parallel(const MlpShape& shape, const Matrix& x, const Matrix& y,
                              std::span<const double> params, std::span<double> grad);

/// Output logits for one input row; `hidden_out` receives post-ReLU
/// activations (size H) and `logits` the K pre-sigmoid outputs.
void mlp_forward_row(const MlpShape& shape, std::span<const double> params, const double* x,
                     std::span<double> hidden_out, std::span<double> logits);

}  // namespace ahmkit::kernels
