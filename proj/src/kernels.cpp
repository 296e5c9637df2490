#include "ahmkit/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ahmkit/error.hpp"

namespace ahmkit::kernels {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

namespace {

void check_lr(const LrProblem& p, std::span<const double> w, std::span<double> gw) {
  if (w.size() != p.x.cols || gw.size() != p.x.cols || p.y.size() != p.x.rows ||
      p.sample_weight.size() != p.x.rows) {
    throw Error(ErrorCategory::schema, "lr kernel: dimension mismatch");
  }
}

void check_mlp(const MlpShape& s, const Matrix& x, const Matrix& y, std::span<const double> params,
               std::span<double> grad) {
  if (x.cols != s.inputs || y.cols != s.outputs || x.rows != y.rows ||
      params.size() != s.parameter_count() || grad.size() != s.parameter_count()) {
    throw Error(ErrorCategory::schema, "mlp kernel: dimension mismatch");
  }
}

// Accumulates the loss and the data-term gradient of rows [lo, hi) into
// `gw`/`gb` (not zeroed here).
double lr_rows(const LrProblem& p, std::span<const double> w, double b, std::size_t lo,
               std::size_t hi, double* gw, double& gb) {
  const std::size_t d = p.x.cols;
  double loss = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double* xi = p.x.row(i);
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += xi[j] * w[j];
    const double s = p.sample_weight[i];
    loss += s * (softplus(z) - p.y[i] * z);
    const double r = s * (sigmoid(z) - p.y[i]);
    for (std::size_t j = 0; j < d; ++j) gw[j] += r * xi[j];
    gb += r;
  }
  return loss;
}

double lr_finish(const LrProblem& p, std::span<const double> w, double loss,
                 std::span<double> gw, double& gb) {
  const double n = static_cast<double>(p.x.rows);
  double reg = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    reg += w[j] * w[j];
    gw[j] = gw[j] / n + p.lambda / n * w[j];
  }
  gb /= n;
  return loss / n + 0.5 * p.lambda / n * reg;
}

double mlp_rows(const MlpShape& s, const Matrix& x, const Matrix& y, std::span<const double> params,
                std::size_t lo, std::size_t hi, double* grad) {
  std::vector<double> h(s.hidden), z(s.outputs), dh(s.hidden);
  const double* w2 = params.data() + s.w2();
  double* g_w1 = grad + s.w1();
  double* g_b1 = grad + s.b1();
  double* g_w2 = grad + s.w2();
  double* g_b2 = grad + s.b2();
  double loss = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double* xi = x.row(i);
    mlp_forward_row(s, params, xi, h, z);
    std::fill(dh.begin(), dh.end(), 0.0);
    const double* yi = y.row(i);
    for (std::size_t k = 0; k < s.outputs; ++k) {
      loss += softplus(z[k]) - yi[k] * z[k];
      const double dz = sigmoid(z[k]) - yi[k];
      g_b2[k] += dz;
      const double* w2k = w2 + k * s.hidden;
      double* g_w2k = g_w2 + k * s.hidden;
      for (std::size_t j = 0; j < s.hidden; ++j) {
        g_w2k[j] += dz * h[j];
        dh[j] += dz * w2k[j];
      }
    }
    for (std::size_t j = 0; j < s.hidden; ++j) {
      if (h[j] <= 0.0) continue;  // ReLU gate
      g_b1[j] += dh[j];
      double* g_w1j = g_w1 + j * s.inputs;
      for (std::size_t c = 0; c < s.inputs; ++c) g_w1j[c] += dh[j] * xi[c];
    }
  }
  return loss;
}

}  // namespace

void mlp_forward_row(const MlpShape& s, std::span<const double> params, const double* x,
                     std::span<double> h, std::span<double> z) {
  const double* w1 = params.data() + s.w1();
  const double* b1 = params.data() + s.b1();
  const double* w2 = params.data() + s.w2();
  const double* b2 = params.data() + s.b2();
  for (std::size_t j = 0; j < s.hidden; ++j) {
    double a = b1[j];
    const double* w1j = w1 + j * s.inputs;
    for (std::size_t c = 0; c < s.inputs; ++c) a += w1j[c] * x[c];
    h[j] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t k = 0; k < s.outputs; ++k) {
    double a = b2[k];
    const double* w2k = w2 + k * s.hidden;
    for (std::size_t j = 0; j < s.hidden; ++j) a += w2k[j] * h[j];
    z[k] = a;
  }
}

double lr_loss_grad_serial(const LrProblem& p, std::span<const double> w, double b,
                           std::span<double> grad_w, double& grad_b) {
  check_lr(p, w, grad_w);
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0;
  const double loss = lr_rows(p, w, b, 0, p.x.rows, grad_w.data(), grad_b);
  return lr_finish(p, w, loss, grad_w, grad_b);
}

double lr_loss_grad_parallel(const LrProblem& p, std::span<const double> w, double b,
                             std::span<double> grad_w, double& grad_b) {
  check_lr(p, w, grad_w);
  const std::size_t n = p.x.rows, d = p.x.cols;
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  // Per chunk: d gradient slots, one bias slot, one loss slot.
  std::vector<double> partial(chunks * (d + 2), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    double* slot = partial.data() + cu * (d + 2);
    const std::size_t lo = cu * kChunkRows, hi = std::min(n, lo + kChunkRows);
    slot[d + 1] = lr_rows(p, w, b, lo, hi, slot, slot[d]);
  }
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0;
  double loss = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* slot = partial.data() + c * (d + 2);
    for (std::size_t j = 0; j < d; ++j) grad_w[j] += slot[j];
    grad_b += slot[d];
    loss += slot[d + 1];
  }
  return lr_finish(p, w, loss, grad_w, grad_b);
}

double mlp_loss_grad_serial(const MlpShape& s, const Matrix& x, const Matrix& y,
                            std::span<const double> params, std::span<double> grad) {
  check_mlp(s, x, y, params, grad);
  std::fill(grad.begin(), grad.end(), 0.0);
  const double loss = mlp_rows(s, x, y, params, 0, x.rows, grad.data());
  const double n = static_cast<double>(x.rows);
  for (auto& g : grad) g /= n;
  return loss / n;
}

double mlp_loss_grad_parallel(const MlpShape& s, const Matrix& x, const Matrix& y,
                              std::span<const double> params, std::span<double> grad) {
  check_mlp(s, x, y, params, grad);
  const std::size_t n = x.rows, m = s.parameter_count();
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<double> partial(chunks * (m + 1), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    double* slot = partial.data() + cu * (m + 1);
    const std::size_t lo = cu * kChunkRows, hi = std::min(n, lo + kChunkRows);
    slot[m] = mlp_rows(s, x, y, params, lo, hi, slot);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* slot = partial.data() + c * (m + 1);
    for (std::size_t j = 0; j < m; ++j) grad[j] += slot[j];
    loss += slot[m];
  }
  const double nd = static_cast<double>(n);
  for (auto& g : grad) g /= nd;
  return loss / nd;
}

}  // namespace ahmkit::kernels
