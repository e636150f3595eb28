#include "dgsmlab/kernel.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dgsmlab;
using doctest::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Hyperparams random_hp(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> ell(0.2, 1.5), s(0.5, 3.0);
  Vector l(d);
  for (Eigen::Index i = 0; i < d; ++i) l[i] = ell(rng);
  return Hyperparams{l, s(rng), 1e-4, 0.0};
}

}  // namespace

TEST_CASE("kernel closed form") {
  const Hyperparams hp1 = Hyperparams::isotropic(1, 1.0, 1.0, 0.0);
  CHECK(kernel(vec({0.0}), vec({std::sqrt(2.0)}), hp1) == Approx(std::exp(-1.0)).epsilon(1e-12));
  const Hyperparams hp2{vec({1.0, 2.0}), 3.0, 0.0, 0.0};
  CHECK(kernel(vec({0.0, 0.0}), vec({1.0, 2.0}), hp2) == Approx(3.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(kernel(vec({0.3, 0.7}), vec({0.3, 0.7}), hp2) == Approx(3.0));
}

TEST_CASE("kernel rejects dimension mismatch and invalid hyperparameters") {
  const Hyperparams hp = Hyperparams::isotropic(2, 0.5, 1.0, 0.0);
  CHECK_THROWS_AS(kernel(vec({0.1}), vec({0.1, 0.2}), hp), InvalidArgument);
  CHECK_THROWS_AS(kernel_grad_x(vec({0.1, 0.2, 0.3}), vec({0.1, 0.2}), hp), InvalidArgument);
  Hyperparams bad = hp;
  bad.lengthscales[1] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = hp;
  bad.noise_var = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("kernel gradient examples") {
  const Hyperparams hp = Hyperparams::isotropic(1, 1.0, 1.0, 0.0);
  CHECK(kernel_grad_x(vec({1.0}), vec({0.0}), hp)[0] == Approx(-std::exp(-0.5)).epsilon(1e-12));
  CHECK(kernel_grad_x(vec({0.4}), vec({0.4}), hp).norm() == 0.0);
  CHECK(kernel_cross_f_deriv(vec({1.0}), vec({0.0}), hp)[0] == Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(kernel_cross_f_deriv(vec({0.4}), vec({0.4}), hp).norm() == 0.0);

  // doubling a lengthscale with fixed lag: 1/4 times the kernel ratio
  const Hyperparams a{vec({0.5, 0.8}), 2.0, 0.0, 0.0};
  Hyperparams b = a;
  b.lengthscales[0] *= 2.0;
  const Vector x = vec({0.9, 0.1}), z = vec({0.2, 0.5});
  const double ratio = kernel(x, z, b) / kernel(x, z, a);
  CHECK(kernel_grad_x(x, z, b)[0] == Approx(0.25 * ratio * kernel_grad_x(x, z, a)[0]).epsilon(1e-12));
}

TEST_CASE("kernel hessian diagonal") {
  CHECK(kernel_hess_diag(vec({0.1, 0.2, 0.3}), Hyperparams::isotropic(3, 1.0, 1.0, 0.0)).isApprox(Vector::Ones(3)));
  CHECK(kernel_hess_diag(vec({0.5}), Hyperparams::isotropic(1, 2.0, 4.0, 0.0))[0] == Approx(1.0));

  // second mixed difference d^2 k / dx_i dz_i at x = z
  std::mt19937_64 rng(3);
  const double h = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const Hyperparams hp = random_hp(rng, 3);
    const Vector x = oracle::random_unit(1, 3, 100 + trial).row(0).transpose();
    const Vector hd = kernel_hess_diag(x, hp);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (kernel(xp, xp, hp) - kernel(xp, xm, hp) - kernel(xm, xp, hp) + kernel(xm, xm, hp)) / (4 * h * h);
      CHECK(hd[i] == Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("kernel symmetry, antisymmetry and PSD Gram matrix") {
  std::mt19937_64 rng(5);
  const Hyperparams hp = random_hp(rng, 4);
  const Matrix P = oracle::random_unit(20, 4, 9);
  Matrix K(20, 20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const Vector x = P.row(i).transpose(), z = P.row(j).transpose();
      K(i, j) = kernel(x, z, hp);
      CHECK(K(i, j) == kernel(z, x, hp));
      CHECK((kernel_cross_f_deriv(x, z, hp) + kernel_grad_x(x, z, hp)).norm() <= 1e-15);
    }
  }
  K.diagonal().array() += 1e-8;
  Eigen::LLT<Matrix> llt(K);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("kernel derivatives match central differences at random pairs") {
  std::mt19937_64 rng(11);
  const double h = 1e-6;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Hyperparams hp = random_hp(rng, 3);
    const Matrix P = oracle::random_unit(2, 3, 1000 + trial);
    const Vector x = P.row(0).transpose(), z = P.row(1).transpose();
    const Vector gx = kernel_grad_x(x, z, hp);
    const Vector gz = kernel_cross_f_deriv(x, z, hp);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Vector xp = x, xm = x, zp = z, zm = z;
      xp[i] += h;
      xm[i] -= h;
      zp[i] += h;
      zm[i] -= h;
      const double fdx = (kernel(xp, z, hp) - kernel(xm, z, hp)) / (2 * h);
      const double fdz = (kernel(x, zp, hp) - kernel(x, zm, hp)) / (2 * h);
      const double scale = std::max(std::abs(fdx), 1e-3 * hp.outputscale);
      CHECK(std::abs(gx[i] - fdx) <= 1e-5 * scale);
      CHECK(std::abs(gz[i] - fdz) <= 1e-5 * scale);
      ++checked;
    }
  }
  CHECK(checked == 300);
}
