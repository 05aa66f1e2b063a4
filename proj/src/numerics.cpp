#include "dexp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dexp/error.hpp"

namespace dexp {
namespace {

// One-sided Jacobi on the columns of a tall matrix (m >= n).
SvdResult svd_tall(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor b = a;
  Tensor v = Tensor::identity(n);
  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 60;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (std::fabs(apq) <= kTol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) /
            (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          b(i, p) = c * bp - s * bq;
          b(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  // Sort by descending column norm (stable on ties by column index).
  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += b(i, j) * b(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sigma[x] > sigma[y];
  });

  Tensor u({m, n});
  Tensor s_out({n});
  Tensor v_sorted({n, n});
  const double smax = sigma[order[0]];
  const double zero_tol = smax > 0.0 ? smax * 1e-13 : 0.0;

  std::vector<std::size_t> needs_completion;
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    s_out[jj] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) v_sorted(i, jj) = v(i, j);
    if (sigma[j] > zero_tol) {
      for (std::size_t i = 0; i < m; ++i) u(i, jj) = b(i, j) / sigma[j];
    } else {
      needs_completion.push_back(jj);
    }
  }

  // Complete U for (near-)zero singular values: orthogonalize coordinate
  // vectors against the filled columns, scanned in a fixed order.
  std::vector<std::size_t> filled;
  for (std::size_t jj = 0; jj < n; ++jj) {
    if (std::find(needs_completion.begin(), needs_completion.end(), jj) ==
        needs_completion.end()) {
      filled.push_back(jj);
    }
  }
  std::size_t trial = 0;
  for (std::size_t jj : needs_completion) {
    for (; trial < m; ++trial) {
      std::vector<double> cand(m, 0.0);
      cand[trial] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k : filled) {
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, k);
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, k);
        }
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < m; ++i) u(i, jj) = cand[i] / nrm;
        filled.push_back(jj);
        ++trial;
        break;
      }
    }
    if (std::find(filled.begin(), filled.end(), jj) == filled.end()) {
      throw NumericError("svd: could not complete orthonormal basis");
    }
  }

  // Canonical signs: largest-magnitude entry of each V column positive.
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mag = std::fabs(v_sorted(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (v_sorted(arg, j) < 0.0) {
      for (std::size_t i = 0; i < n; ++i) v_sorted(i, j) = -v_sorted(i, j);
      for (std::size_t i = 0; i < m; ++i) u(i, j) = -u(i, j);
    }
  }

  return {std::move(u), std::move(s_out), transpose(v_sorted)};
}

}  // namespace

SvdResult svd(const Tensor& a) {
  if (a.rank() != 2 || a.rows() == 0 || a.cols() == 0) {
    throw std::invalid_argument("svd: needs a non-empty matrix");
  }
  if (!all_finite(a)) throw NumericError("svd: non-finite matrix");
  if (a.rows() >= a.cols()) return svd_tall(a);
  // Wide matrix: factorize the transpose and swap factors.
  SvdResult r = svd_tall(transpose(a));
  return {transpose(r.vt), std::move(r.s), transpose(r.u)};
}

AdamState AdamState::zeros_like(const Tensor& params) {
  AdamState st;
  st.m = Tensor::zeros(params.shape());
  st.v = Tensor::zeros(params.shape());
  st.t = 0;
  return st;
}

void adam_step_inplace(Tensor& params, const Tensor& grads, AdamState& state,
                       const AdamConfig& cfg, const char* block) {
  if (!params.same_shape(grads)) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!all_finite(grads)) {
    throw NumericError(std::string("adam_step: non-finite gradient in ") +
                       block);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

std::pair<Tensor, AdamState> adam_step(Tensor params, const Tensor& grads,
                                       AdamState state, const AdamConfig& cfg) {
  adam_step_inplace(params, grads, state, cfg);
  return {std::move(params), std::move(state)};
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h) {
  Tensor grad = Tensor::zeros(x.shape());
  Tensor probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + h;
    const double fp = f(probe);
    probe[k] = orig - h;
    const double fm = f(probe);
    probe[k] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double mmd2(const Tensor& x, const Tensor& y, double bandwidth) {
  if (x.rank() != 2 || y.rank() != 2 || x.rows() == 0 || y.rows() == 0) {
    throw std::invalid_argument("mmd2: sample sets must be non-empty");
  }
  if (x.cols() != y.cols()) {
    throw std::invalid_argument("mmd2: dimension mismatch");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("mmd2: bandwidth must be positive");
  }
  // Canonical argument order makes mmd2(x, y) == mmd2(y, x) bit-for-bit.
  const Tensor* a = &x;
  const Tensor* b = &y;
  if (std::lexicographical_compare(y.data().begin(), y.data().end(),
                                   x.data().begin(), x.data().end())) {
    std::swap(a, b);
  }
  const std::size_t n = a->rows(), m = b->rows(), d = a->cols();
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  auto kernel = [&](const Tensor& p, std::size_t i, const Tensor& q,
                    std::size_t j) {
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double delta = p(i, k) - q(j, k);
      ss += delta * delta;
    }
    return std::exp(-ss * gamma);
  };
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sxx += kernel(*a, i, *a, j);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) syy += kernel(*b, i, *b, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) sxy += kernel(*a, i, *b, j);
  const double value = sxx / static_cast<double>(n * n) +
                       syy / static_cast<double>(m * m) -
                       2.0 * sxy / static_cast<double>(n * m);
  return std::max(0.0, value);
}

}  // namespace dexp
