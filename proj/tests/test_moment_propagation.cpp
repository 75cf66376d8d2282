#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "vep/jj_likelihood.hpp"
#include "vep/moment_propagation.hpp"
#include "vep/oracle.hpp"
#include "vep/random.hpp"

using namespace vep;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

WeightMoments random_weights(const NetworkShape& shape, Rng& rng, double v_lo = 0.1, double v_hi = 1.0) {
  WeightMoments w(shape.num_layers());
  for (std::size_t l = 0; l < shape.num_layers(); ++l) {
    const auto r = static_cast<Eigen::Index>(shape.rows(l));
    const auto c = static_cast<Eigen::Index>(shape.cols(l));
    w[l].mean.resize(r, c);
    w[l].var.resize(r, c);
    for (Eigen::Index k = 0; k < r; ++k) {
      for (Eigen::Index j = 0; j < c; ++j) {
        w[l].mean(k, j) = rng.uniform(-1.5, 1.5);
        w[l].var(k, j) = rng.uniform(v_lo, v_hi);
      }
    }
  }
  return w;
}

Eigen::VectorXd random_input(std::size_t n, Rng& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-2, 2);
  return x;
}

// One draw of a_L from the network with sampled weights.
double sample_output(const NetworkShape& shape, const WeightMoments& w, const Eigen::VectorXd& x, Rng& rng) {
  Eigen::VectorXd z = x;
  for (std::size_t l = 0; l < shape.num_layers(); ++l) {
    Eigen::VectorXd in(z.size() + (shape.bias[l] ? 1 : 0));
    in.head(z.size()) = z;
    if (shape.bias[l]) in(z.size()) = 1.0;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(w[l].mean.rows());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      for (Eigen::Index j = 0; j < in.size(); ++j) {
        a(k) += rng.normal(w[l].mean(k, j), std::sqrt(w[l].var(k, j))) * in(j);
      }
    }
    z = l + 1 == shape.num_layers() ? a : a.cwiseMax(0.0);
  }
  return z(0);
}

}  // namespace

TEST_CASE("linear layer moments") {
  Eigen::VectorXd m(1), v(1);
  m << 1.0;
  v << 0.0;
  Eigen::MatrixXd mw(1, 1), vw(1, 1);
  mw << 0.5;
  vw << 0.1;
  const LinearMoments a = linear_layer_moments(m, v, mw, vw);
  CHECK(a.mean(0) == 0.5);
  CHECK(a.var(0) == doctest::Approx(0.1));

  Eigen::MatrixXd W(2, 3);
  W << 1, 2, 3, -1, 0.5, 2;
  Eigen::VectorXd z(3);
  z << 0.2, -1, 4;
  const LinearMoments det = linear_layer_moments(z, Eigen::VectorXd::Zero(3), W, Eigen::MatrixXd::Zero(2, 3));
  CHECK((det.mean - W * z).norm() == 0.0);
  CHECK(det.var.norm() == 0.0);

  CHECK_THROWS_AS(linear_layer_moments(z, Eigen::VectorXd::Zero(2), W, W), std::invalid_argument);
  CHECK_THROWS_AS(linear_layer_moments(m, v, W, W), std::invalid_argument);
}

TEST_CASE("linear layer moments match Monte Carlo") {
  Eigen::VectorXd mz(3), vz(3);
  mz << 0.5, -1.0, 2.0;
  vz << 0.3, 0.8, 0.1;
  Eigen::MatrixXd mw(1, 3), vw(1, 3);
  mw << 1.2, 0.4, -0.7;
  vw << 0.2, 0.5, 0.3;
  const LinearMoments a = linear_layer_moments(mz, vz, mw, vw);
  const MCEstimate mc = mc_moments(
      [&](Rng& r) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += r.normal(mw(0, j), std::sqrt(vw(0, j))) * r.normal(mz(j), std::sqrt(vz(j)));
        return s;
      },
      1000000, 99);
  CHECK(std::abs(mc.mean - a.mean(0)) < 4.0 * mc.std_error_mean);
  CHECK(std::abs(mc.variance - a.var(0)) < 4.0 * mc.std_error_var);
}

TEST_CASE("ReLU moments") {
  const ReluMoments a = relu_moments(0.0, 1.0);
  CHECK(a.mean == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  // closed form (1 − 1/π)/2 − ... frozen from mpmath; the 7-digit 0.3408454 quoted elsewhere is off
  CHECK(a.var == doctest::Approx(0.3408450569081047).epsilon(1e-13));

  const ReluMoments b = relu_moments(100.0, 1e-4);
  CHECK(b.mean == doctest::Approx(100.0));
  CHECK(b.var == doctest::Approx(1e-4).epsilon(1e-10));

  const ReluMoments c = relu_moments(-100.0, 1e-4);
  CHECK(c.mean >= 0.0);
  CHECK(c.mean < 1e-300);
  CHECK(c.var >= 0.0);
  CHECK(c.var < 1e-300);

  const ReluMoments d = relu_moments(-0.5, 0.0);
  CHECK(d.mean == 0.0);
  CHECK(d.var == 0.0);
  CHECK(relu_moments(0.7, 0.0).mean == 0.7);
  CHECK_THROWS_AS(relu_moments(0.0, -1.0), DomainError);
}

TEST_CASE("ReLU moments: Jensen bound, non-negativity, tail continuity") {
  Rng rng(6);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::exp(rng.uniform(-10, 5));
    const double m = rng.uniform(-50, 50) * std::sqrt(v);
    const ReluMoments r = relu_moments(m, v);
    // The excess over max(m, 0) drops below one ulp deep in the upper tail.
    REQUIRE(r.mean >= std::max(m, 0.0) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon()));
    REQUIRE(r.var >= 0.0);
    REQUIRE(r.var <= v * (1 + 1e-12));
  }
  const ReluMoments in = relu_moments(-29.999999, 1.0);
  const ReluMoments out = relu_moments(-30.000001, 1.0);
  CHECK(in.mean / out.mean == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(in.var / out.var == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("linear Jacobian matches finite differences") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x(4);
    x << rng.uniform(-2, 2), rng.uniform(0.1, 2), rng.uniform(-2, 2), rng.uniform(0.1, 2);
    const LinearPartials p = linear_moment_jacobian(x(0), x(1), x(2), x(3));
    const auto ma = [](const Eigen::VectorXd& y) { return y(0) * y(2); };
    const auto va = [](const Eigen::VectorXd& y) { return y(0) * y(0) * y(3) + y(1) * y(2) * y(2) + y(1) * y(3); };
    const Eigen::VectorXd gm = finite_diff_grad(ma, x, 1e-5);
    const Eigen::VectorXd gv = finite_diff_grad(va, x, 1e-5);
    CHECK(rel_err(p.dma_dmz, gm(0)) < 1e-7);
    CHECK(p.dma_dvz == 0.0);
    CHECK(rel_err(p.dma_dmw, gm(2)) < 1e-7);
    CHECK(p.dma_dvw == 0.0);
    CHECK(rel_err(p.dva_dmz, gv(0)) < 1e-7);
    CHECK(rel_err(p.dva_dvz, gv(1)) < 1e-7);
    CHECK(rel_err(p.dva_dmw, gv(2)) < 1e-7);
    CHECK(rel_err(p.dva_dvw, gv(3)) < 1e-7);
  }
  const LinearPartials det = linear_moment_jacobian(1.5, 0.0, -0.4, 0.0);
  CHECK(det.dva_dmz == 0.0);
  CHECK(det.dva_dmw == 0.0);
}

TEST_CASE("ReLU Jacobian matches finite differences") {
  const auto check_at = [](double m, double v, double tol) {
    CAPTURE(m);
    CAPTURE(v);
    const ReluMoments r = relu_moments(m, v);
    const ReluPartials p = relu_moment_jacobian(r, m, v);
    const double step = 1e-5;
    const double hv = step * std::min(1.0, v);
    const double dmz_dm = (relu_moments(m + step * std::max(1.0, std::abs(m)), v).mean -
                           relu_moments(m - step * std::max(1.0, std::abs(m)), v).mean) /
                          (2 * step * std::max(1.0, std::abs(m)));
    const double dvz_dm = (relu_moments(m + step * std::max(1.0, std::abs(m)), v).var -
                           relu_moments(m - step * std::max(1.0, std::abs(m)), v).var) /
                          (2 * step * std::max(1.0, std::abs(m)));
    const double dmz_dv = (relu_moments(m, v + hv).mean - relu_moments(m, v - hv).mean) / (2 * hv);
    const double dvz_dv = (relu_moments(m, v + hv).var - relu_moments(m, v - hv).var) / (2 * hv);
    // Central differences cannot resolve derivatives below ~eps·|f|/h.
    const auto fd_err = [&](double analytic, double fd, double f, double h) {
      const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f)) / h;
      const double floor = noise / tol;
      return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), floor});
    };
    const double hm = step * std::max(1.0, std::abs(m));
    CHECK(fd_err(p.dmz_dma, dmz_dm, r.mean, hm) < tol);
    CHECK(fd_err(p.dmz_dva, dmz_dv, r.mean, hv) < tol);
    CHECK(fd_err(p.dvz_dma, dvz_dm, r.var, hm) < tol);
    CHECK(fd_err(p.dvz_dva, dvz_dv, r.var, hv) < tol);
  };
  check_at(0.3, 0.7, 1e-5);
  for (double m : {-4.0, -1.0, -0.2, 0.0, 0.5, 2.0, 5.0}) {
    for (double v : {0.05, 0.5, 1.0, 3.0}) check_at(m, v, 1e-5);
  }
}

TEST_CASE("ReLU Jacobian matches closed forms in the tails") {
  // With m_z = m Φ(α) + s φ(α) and E[z²] = (m² + v) Φ(α) + m s φ(α):
  //   ∂m_z/∂m = Φ(α), ∂m_z/∂v = φ(α)/(2s),
  //   ∂v_z/∂m = 2 m_z Φ(−α), ∂v_z/∂v = Φ(α) − m_z φ(α)/s.
  for (double m : {-8.0, -5.0, -2.0, -0.3, 0.0, 0.4, 3.0, 5.0, 8.0}) {
    for (double v : {0.1, 0.5, 2.0}) {
      CAPTURE(m);
      CAPTURE(v);
      const double s = std::sqrt(v);
      const double a = m / s;
      const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
      const double Phi = 0.5 * std::erfc(-a / std::numbers::sqrt2);
      const double m_z = m * Phi + s * phi;
      const ReluMoments r = relu_moments(m, v);
      const ReluPartials p = relu_moment_jacobian(r, m, v);
      const auto close = [](double x, double y, double scale) { return std::abs(x - y) <= 1e-10 * scale; };
      CHECK(close(p.dmz_dma, Phi, 1.0));
      CHECK(close(p.dmz_dva, phi / (2 * s), std::abs(phi / (2 * s))));
      const double Phi_neg = 0.5 * std::erfc(a / std::numbers::sqrt2);
      CHECK(close(p.dvz_dma, 2 * m_z * Phi_neg, 2 * m_z * Phi_neg));
      CHECK(close(p.dvz_dva, Phi - m_z * phi / s, std::max(Phi, 1e-300)));
    }
  }
}

TEST_CASE("ReLU Jacobian asymptotes") {
  const ReluPartials id = relu_moment_jacobian(relu_moments(50.0, 1.0), 50.0, 1.0);
  CHECK(id.dmz_dma == doctest::Approx(1.0));
  CHECK(id.dvz_dva == doctest::Approx(1.0));
  CHECK(std::abs(id.dmz_dva) < 1e-12);
  CHECK(std::abs(id.dvz_dma) < 1e-12);
  const ReluPartials dead = relu_moment_jacobian(relu_moments(-50.0, 1.0), -50.0, 1.0);
  for (double x : {dead.dmz_dma, dead.dmz_dva, dead.dvz_dma, dead.dvz_dva}) {
    CHECK(std::isfinite(x));
    CHECK(std::abs(x) < 1e-12);
  }
  const ReluPartials far = relu_moment_jacobian(relu_moments(-1e3, 1.0), -1e3, 1.0);
  for (double x : {far.dmz_dma, far.dmz_dva, far.dvz_dma, far.dvz_dva}) CHECK(std::isfinite(x));
  const ReluPartials sub_on = relu_moment_jacobian(relu_moments(0.4, 0.0), 0.4, 0.0);
  CHECK(sub_on.dmz_dma == 1.0);
  CHECK(sub_on.dvz_dva == 1.0);
  CHECK(sub_on.dmz_dva == 0.0);
  const ReluPartials sub_off = relu_moment_jacobian(relu_moments(-0.4, 0.0), -0.4, 0.0);
  CHECK(sub_off.dmz_dma == 0.0);
  CHECK(sub_off.dvz_dva == 0.0);
  CHECK_THROWS_AS(relu_moment_jacobian(relu_moments(0.0, 1.0), 0.0, -1.0), DomainError);
}

TEST_CASE("network shape") {
  const NetworkShape s = NetworkShape::with_bias({2, 3, 1});
  CHECK(s.num_layers() == 2);
  CHECK(s.cols(0) == 3);
  CHECK(s.rows(0) == 3);
  CHECK(s.num_weights() == 9 + 4);
  NetworkShape bad = s;
  bad.bias.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(NetworkShape::with_bias({3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(NetworkShape::with_bias({3, 0, 1}).validate(), std::invalid_argument);
}

TEST_CASE("forward with deterministic weights is the plain network") {
  const NetworkShape s = NetworkShape::with_bias({2, 3, 1});
  Rng rng(2);
  WeightMoments w = random_weights(s, rng);
  for (auto& l : w) l.var.setZero();
  const Eigen::VectorXd x = random_input(2, rng);
  const ForwardTrace t = forward(s, w, x);
  Eigen::VectorXd in(3);
  in << x, 1.0;
  const Eigen::VectorXd h = (w[0].mean * in).cwiseMax(0.0);
  Eigen::VectorXd in2(4);
  in2 << h, 1.0;
  CHECK(t.output_mean() == doctest::Approx((w[1].mean * in2)(0)).epsilon(1e-14));
  CHECK(t.output_var() == 0.0);
}

TEST_CASE("forward with one linear layer is linear_layer_moments") {
  NetworkShape s = NetworkShape::with_bias({3, 1});
  s.bias[0] = false;
  Rng rng(3);
  const WeightMoments w = random_weights(s, rng);
  const Eigen::VectorXd x = random_input(3, rng);
  const ForwardTrace t = forward(s, w, x);
  const LinearMoments a = linear_layer_moments(x, Eigen::VectorXd::Zero(3), w[0].mean, w[0].var);
  CHECK(t.output_mean() == a.mean(0));
  CHECK(t.output_var() == a.var(0));
  CHECK_THROWS_AS(forward(s, w, random_input(2, rng)), std::invalid_argument);
}

TEST_CASE("forward reports non-finite moments with the layer") {
  const NetworkShape s = NetworkShape::with_bias({1, 2, 1});
  Rng rng(4);
  WeightMoments w = random_weights(s, rng);
  w[1].mean(0, 0) = kInf;
  Eigen::VectorXd x(1);
  x << 1.0;
  CHECK_THROWS_WITH(forward(s, w, x), doctest::Contains("layer 2"));
}

TEST_CASE("forward matches Monte Carlo on one-hidden-layer networks") {
  Rng rng(30);
  for (const auto& sizes : {std::vector<std::size_t>{2, 3, 1}, std::vector<std::size_t>{4, 5, 1}}) {
    for (int rep = 0; rep < 3; ++rep) {
      const NetworkShape s = NetworkShape::with_bias(sizes);
      const WeightMoments w = random_weights(s, rng);
      const Eigen::VectorXd x = random_input(sizes[0], rng);
      const ForwardTrace t = forward(s, w, x);
      const MCEstimate mc = mc_moments([&](Rng& r) { return sample_output(s, w, x, r); }, 400000, 100 + rep);
      CHECK(std::abs(mc.mean - t.output_mean()) < 4.0 * mc.std_error_mean);
      CHECK(std::abs(mc.variance - t.output_var()) < 4.0 * mc.std_error_var);
    }
  }
}

TEST_CASE("forward stays within 10% of Monte Carlo with two hidden layers") {
  Rng rng(31);
  const NetworkShape s = NetworkShape::with_bias({3, 4, 4, 1});
  for (int rep = 0; rep < 3; ++rep) {
    const WeightMoments w = random_weights(s, rng, 0.01, 0.1);
    const Eigen::VectorXd x = random_input(3, rng);
    const ForwardTrace t = forward(s, w, x);
    const MCEstimate mc = mc_moments([&](Rng& r) { return sample_output(s, w, x, r); }, 200000, 200 + rep);
    CHECK(std::abs(mc.mean - t.output_mean()) < 0.1 * std::abs(mc.mean) + 4.0 * mc.std_error_mean);
    CHECK(std::abs(mc.variance - t.output_var()) < 0.1 * mc.variance + 4.0 * mc.std_error_var);
  }
}

TEST_CASE("forward variances are non-negative and ReLU means dominate") {
  Rng rng(40);
  for (int rep = 0; rep < 200; ++rep) {
    const NetworkShape s = NetworkShape::with_bias({3, 5, 4, 1});
    const WeightMoments w = random_weights(s, rng, 0.0, 3.0);
    const ForwardTrace t = forward(s, w, random_input(3, rng) * 3.0);
    for (const LayerTrace& l : t.layers) {
      REQUIRE((l.v_a.array() >= 0.0).all());
      if (l.relu) {
        REQUIRE((l.v_z.array() >= 0.0).all());
        REQUIRE((l.m_z.array() >= l.m_a.array().max(0.0)).all());
      }
    }
  }
}

TEST_CASE("backward: zero seed and single layer") {
  const NetworkShape s = NetworkShape::with_bias({2, 3, 1});
  Rng rng(50);
  const WeightMoments w = random_weights(s, rng);
  const ForwardTrace t = forward(s, w, random_input(2, rng));
  const MomentGradients zero = backward(t, 0.0, 0.0);
  for (const LayerMoments& l : zero.layers) {
    CHECK(l.mean.norm() == 0.0);
    CHECK(l.var.norm() == 0.0);
  }

  const NetworkShape lin = NetworkShape::with_bias({3, 1});
  const WeightMoments lw = random_weights(lin, rng);
  const Eigen::VectorXd x = random_input(3, rng);
  const MomentGradients g = backward(forward(lin, lw, x), 0.7, -0.2);
  Eigen::VectorXd in(4);
  in << x, 1.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    // input variance is zero, so the mean gradient is d_m · m_z
    CHECK(g.layers[0].mean(0, j) == doctest::Approx(0.7 * in(j)));
    CHECK(g.layers[0].var(0, j) == doctest::Approx(-0.2 * in(j) * in(j)));
  }
}

TEST_CASE("backward matches end-to-end finite differences") {
  Rng rng(60);
  for (int rep = 0; rep < 20; ++rep) {
    const NetworkShape s = NetworkShape::with_bias({2, 3, 1});
    const WeightMoments w = random_weights(s, rng, 0.2, 1.0);
    const Eigen::VectorXd x = random_input(2, rng);
    const int y = rep % 2;
    const double zeta = rng.uniform(0.5, 3.0);
    const ForwardTrace t = forward(s, w, x);
    const LogZGradient seed = grad_log_Zy(t.output_mean(), t.output_var(), y, zeta, LikelihoodMode::verified);
    const MomentGradients g = backward(t, seed.d_m, seed.d_v);
    for (std::size_t l = 0; l < s.num_layers(); ++l) {
      for (Eigen::Index k = 0; k < w[l].mean.rows(); ++k) {
        for (Eigen::Index j = 0; j < w[l].mean.cols(); ++j) {
          for (bool var : {false, true}) {
            const auto f = [&](double value) {
              WeightMoments p = w;
              (var ? p[l].var : p[l].mean)(k, j) = value;
              const ForwardTrace pt = forward(s, p, x);
              return log_Zy(pt.output_mean(), pt.output_var(), y, zeta, LikelihoodMode::verified);
            };
            const double x0 = (var ? w[l].var : w[l].mean)(k, j);
            const double fd = finite_diff(f, x0, var ? 1e-5 * std::min(1.0, x0) : 1e-5);
            const double an = (var ? g.layers[l].var : g.layers[l].mean)(k, j);
            REQUIRE(rel_err(an, fd) < 1e-4);
          }
        }
      }
    }
  }
}
