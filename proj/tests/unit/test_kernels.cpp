#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>
#include <vector>

#include "ahmkit/kernels.hpp"

using namespace ahmkit::kernels;

namespace {

constexpr double kStep = 1e-5;
constexpr double kMaxRelError = 1e-4;

double rel_error(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale < 1e-7 ? std::fabs(a - b) : std::fabs(a - b) / scale;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> n(0.0, spread);
  Matrix m(r, c);
  for (auto& v : m.data) v = n(rng);
  return m;
}

struct LrFixture {
  Matrix x;
  std::vector<double> y, s, w;
  double b = 0.3;
  explicit LrFixture(std::size_t n, std::size_t d, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    x = random_matrix(n, d, rng);
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back((rng() & 1u) ? 1.0 : 0.0);
      s.push_back(0.5 + static_cast<double>(rng() % 100) / 100.0);
    }
    std::normal_distribution<double> g(0.0, 0.7);
    for (std::size_t j = 0; j < d; ++j) w.push_back(g(rng));
  }
  LrProblem problem(double lambda = 0.8) const { return {x, y, s, lambda}; }
};

struct MlpFixture {
  MlpShape shape;
  Matrix x, y;
  std::vector<double> params;
  MlpFixture(std::size_t n, std::size_t d, std::size_t h, std::size_t k, std::uint64_t seed = 2)
      : shape{d, h, k} {
    std::mt19937_64 rng(seed);
    x = random_matrix(n, d, rng);
    y = Matrix(n, k);
    for (auto& v : y.data) v = (rng() & 1u) ? 1.0 : 0.0;
    std::normal_distribution<double> g(0.0, 0.5);
    params.resize(shape.parameter_count());
    for (auto& p : params) p = g(rng);
  }
};

}  // namespace

TEST_CASE("sigmoid and softplus are stable at the extremes") {
  CHECK(sigmoid(0) == 0.5);
  CHECK(sigmoid(800) == 1.0);
  CHECK(sigmoid(-800) == 0.0);
  CHECK(std::isfinite(softplus(800)));
  CHECK(softplus(800) == doctest::Approx(800));
  CHECK(softplus(-800) >= 0.0);
  CHECK(softplus(0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("logistic gradient matches central finite differences") {
  LrFixture f(57, 6);
  const auto p = f.problem();
  std::vector<double> g(f.w.size());
  double gb = 0;
  lr_loss_grad_serial(p, f.w, f.b, g, gb);
  std::vector<double> scratch(f.w.size());
  double sb = 0;
  for (std::size_t j = 0; j < f.w.size(); ++j) {
    auto wp = f.w, wm = f.w;
    wp[j] += kStep;
    wm[j] -= kStep;
    const double fd = (lr_loss_grad_serial(p, wp, f.b, scratch, sb) -
                       lr_loss_grad_serial(p, wm, f.b, scratch, sb)) / (2 * kStep);
    CAPTURE(j);
    CHECK(rel_error(g[j], fd) < kMaxRelError);
  }
  const double fd_b = (lr_loss_grad_serial(p, f.w, f.b + kStep, scratch, sb) -
                       lr_loss_grad_serial(p, f.w, f.b - kStep, scratch, sb)) / (2 * kStep);
  CHECK(rel_error(gb, fd_b) < kMaxRelError);
}

TEST_CASE("logistic loss at zero weights is the weighted log 2") {
  LrFixture f(10, 3);
  std::vector<double> zero(3, 0.0), g(3);
  double gb = 0;
  double sum_s = 0;
  for (double s : f.s) sum_s += s;
  CHECK(lr_loss_grad_serial(f.problem(), zero, 0.0, g, gb) ==
        doctest::Approx(sum_s / 10.0 * std::log(2.0)));
}

TEST_CASE("perceptron gradient matches central finite differences") {
  MlpFixture f(23, 4, 7, 5);
  std::vector<double> g(f.params.size()), scratch(f.params.size());
  mlp_loss_grad_serial(f.shape, f.x, f.y, f.params, g);
  double worst = 0;
  for (std::size_t j = 0; j < f.params.size(); ++j) {
    auto pp = f.params, pm = f.params;
    pp[j] += kStep;
    pm[j] -= kStep;
    const double fd = (mlp_loss_grad_serial(f.shape, f.x, f.y, pp, scratch) -
                       mlp_loss_grad_serial(f.shape, f.x, f.y, pm, scratch)) / (2 * kStep);
    worst = std::max(worst, rel_error(g[j], fd));
  }
  CHECK(worst < kMaxRelError);
}

TEST_CASE("forward pass agrees with the loss kernel") {
  MlpFixture f(1, 3, 4, 2);
  std::vector<double> h(4), z(2), g(f.params.size());
  mlp_forward_row(f.shape, f.params, f.x.row(0), h, z);
  double expected = 0;
  for (std::size_t k = 0; k < 2; ++k) expected += softplus(z[k]) - f.y(0, k) * z[k];
  CHECK(mlp_loss_grad_serial(f.shape, f.x, f.y, f.params, g) == doctest::Approx(expected));
  for (double v : h) CHECK(v >= 0.0);
}

TEST_CASE("parallel kernels agree with the serial reference") {
  for (std::size_t n : {1u, 31u, 32u, 33u, 250u}) {
    LrFixture f(n, 5, n);
    std::vector<double> gs(5), gp(5);
    double bs = 0, bp = 0;
    const double ls = lr_loss_grad_serial(f.problem(), f.w, f.b, gs, bs);
    const double lp = lr_loss_grad_parallel(f.problem(), f.w, f.b, gp, bp);
    CAPTURE(n);
    CHECK(lp == doctest::Approx(ls).epsilon(1e-12));
    CHECK(bp == doctest::Approx(bs).epsilon(1e-12));
    for (std::size_t j = 0; j < 5; ++j) CHECK(gp[j] == doctest::Approx(gs[j]).epsilon(1e-12));

    MlpFixture m(n, 4, 6, 5, n + 1);
    std::vector<double> ms(m.params.size()), mp(m.params.size());
    const double mls = mlp_loss_grad_serial(m.shape, m.x, m.y, m.params, ms);
    const double mlp = mlp_loss_grad_parallel(m.shape, m.x, m.y, m.params, mp);
    CHECK(mlp == doctest::Approx(mls).epsilon(1e-12));
    for (std::size_t j = 0; j < ms.size(); ++j) CHECK(mp[j] == doctest::Approx(ms[j]).epsilon(1e-10));
  }
}

TEST_CASE("parallel kernels are bit-identical for every thread count") {
  LrFixture f(1000, 8, 5);
  MlpFixture m(700, 8, 16, 5, 6);
  const int saved = omp_get_max_threads();
  std::vector<double> ref_g, ref_m;
  double ref_b = 0, ref_l = 0, ref_ml = 0;
  for (int threads : {1, 2, 3, 4, 7, 8}) {
    omp_set_num_threads(threads);
    std::vector<double> g(8), mg(m.params.size());
    double b = 0;
    const double l = lr_loss_grad_parallel(f.problem(), f.w, f.b, g, b);
    const double ml = mlp_loss_grad_parallel(m.shape, m.x, m.y, m.params, mg);
    if (ref_g.empty()) {
      ref_g = g;
      ref_m = mg;
      ref_b = b;
      ref_l = l;
      ref_ml = ml;
      continue;
    }
    CAPTURE(threads);
    CHECK(g == ref_g);
    CHECK(mg == ref_m);
    CHECK(b == ref_b);
    CHECK(l == ref_l);
    CHECK(ml == ref_ml);
  }
  omp_set_num_threads(saved);
}
