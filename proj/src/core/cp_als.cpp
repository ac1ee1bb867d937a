/* Copyright (c) 2026 The gtgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "gtgen/cp_als.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>

#include "gtgen/error.hpp"
#include "gtgen/rng.hpp"

namespace gtgen {

namespace {

std::atomic<std::uint64_t> g_cp_als_calls{0};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

Matrix gram(const Matrix& m) {
  Matrix g(m.cols(), m.cols());
  Eigen::Map<RowMat>(g.data().data(), g.rows(), g.cols()).noalias() =
      view(m).transpose() * view(m);
  return g;
}

Matrix hadamard(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t n = 0; n < out.data().size(); ++n)
    out.data()[n] = x.data()[n] * y.data()[n];
  return out;
}

// Least-squares update for one factor: X(mode) * KR * pinv(V).
Matrix solve_factor(const DenseTensor3& x, int mode, const Matrix& kr_left,
                    const Matrix& kr_right, const Matrix& v) {
  const Matrix mttkrp = matmul(unfold(x, mode), khatri_rao(kr_left, kr_right));
  return matmul(mttkrp, symmetric_pinv(v));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail_usage("matmul inner dimension mismatch: " + std::to_string(a.cols()) +
               " vs " + std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  Eigen::Map<RowMat>(out.data().data(), out.rows(), out.cols()).noalias() =
      view(a) * view(b);
  return out;
}

Matrix symmetric_pinv(const Matrix& g, double rel_clamp) {
  const Eigen::MatrixXd sym = view(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index n = 0; n < lambda.size(); ++n) {
    if (lmax > 0.0 && lambda[n] > rel_clamp * lmax) inv[n] = 1.0 / lambda[n];
  }
  const Eigen::MatrixXd& q = eig.eigenvectors();
  const Eigen::MatrixXd p = q * inv.asDiagonal() * q.transpose();
  Matrix out(g.rows(), g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c)
      out(r, c) = p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

std::uint64_t cp_als_call_count() { return g_cp_als_calls.load(); }

CpAlsResult cp_als(const DenseTensor3& x, const CpAlsOptions& opts) {
  g_cp_als_calls.fetch_add(1);
  if (opts.rank < 1) fail_usage("cp_als rank must be >= 1");
  if (opts.max_iters < 1) fail_usage("cp_als max_iters must be >= 1");
  if (opts.tol < 0.0) fail_usage("cp_als tol must be nonnegative");
  const double xnorm = frobenius_norm(x);
  if (!(xnorm > 0.0)) fail_numerical("cp_als: input tensor has zero norm; relative fit is undefined");

  const Dims3 d = x.dims();
  const std::size_t r = opts.rank;
  Rng rng(opts.seed);
  CPFactors f(d, r);
  rng.fill_uniform(f.a.data(), -1.0, 1.0);
  rng.fill_uniform(f.b.data(), -1.0, 1.0);
  rng.fill_uniform(f.c.data(), -1.0, 1.0);

  CpAlsResult result;
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    f.a = solve_factor(x, 1, f.c, f.b, hadamard(gram(f.c), gram(f.b)));
    f.b = solve_factor(x, 2, f.c, f.a, hadamard(gram(f.c), gram(f.a)));
    f.c = solve_factor(x, 3, f.b, f.a, hadamard(gram(f.b), gram(f.a)));

    const double err = frobenius_distance(x, reconstruct(f)) / xnorm;
    if (!std::isfinite(err)) fail_numerical("cp_als diverged to a non-finite error");
    result.fit_history.push_back(err);
    if (it > 0) {
      const double prev = result.fit_history[it - 1];
      if (prev - err < opts.tol) break;
    }
  }
  result.factors = std::move(f);
  return result;
}

}  // namespace gtgen
