// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Minimal dense-network building blocks in double precision: row-major
// matrices over CBLAS, dense/batch-norm/relu/dropout/max-pool layers with
// explicit backward passes, softmax and negative log-likelihood.

#ifndef POINTPROP_NN_HPP
#define POINTPROP_NN_HPP

#include <cblas.h>

#include <vector>

#include "pointprop/core.hpp"

namespace pointprop {
namespace nn {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

/// C = alpha * op(A) * op(B) + beta * C
inline void gemm(bool trans_a, bool trans_b, double alpha, const Mat& a,
                 const Mat& b, double beta, Mat& c) {
  const int m = trans_a ? a.cols : a.rows;
  const int k = trans_a ? a.rows : a.cols;
  const int n = trans_b ? b.rows : b.cols;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a.v.data(),
              a.cols, b.v.data(), b.cols, beta, c.v.data(), c.cols);
}

// ---------------------------------------------------------------------------
// Dense layer: y = x * W + b, W is in x out.
// ---------------------------------------------------------------------------

struct DenseParam {
  Mat w;
  std::vector<double> b;

  DenseParam() = default;
  DenseParam(int in, int out) : w(in, out), b(static_cast<std::size_t>(out), 0.0) {}
};

inline Mat dense_forward(const DenseParam& p, const Mat& x) {
  Mat y(x.rows, p.w.cols);
  gemm(false, false, 1.0, x, p.w, 0.0, y);
  for (int r = 0; r < y.rows; ++r) {
    double* row = y.row(r);
    for (int c = 0; c < y.cols; ++c) row[c] += p.b[static_cast<std::size_t>(c)];
  }
  return y;
}

/// Accumulates into grad; returns dx.
inline Mat dense_backward(const DenseParam& p, DenseParam& grad, const Mat& x,
                          const Mat& dy) {
  gemm(true, false, 1.0, x, dy, 1.0, grad.w);
  for (int r = 0; r < dy.rows; ++r) {
    const double* row = dy.row(r);
    for (int c = 0; c < dy.cols; ++c) grad.b[static_cast<std::size_t>(c)] += row[c];
  }
  Mat dx(x.rows, x.cols);
  gemm(false, true, 1.0, dy, p.w, 0.0, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Batch normalization over rows (one statistic per column).
// ---------------------------------------------------------------------------

struct BnParam {
  std::vector<double> gamma, beta, running_mean, running_var;

  BnParam() = default;
  explicit BnParam(int channels)
      : gamma(static_cast<std::size_t>(channels), 1.0),
        beta(static_cast<std::size_t>(channels), 0.0),
        running_mean(static_cast<std::size_t>(channels), 0.0),
        running_var(static_cast<std::size_t>(channels), 1.0) {}
};

struct BnCache {
  Mat xhat;
  std::vector<double> inv_std;
};

inline Mat bn_forward(BnParam& p, const Mat& x, bool train, double eps,
                      double momentum, bool update_running, BnCache* cache) {
  const int c_count = x.cols;
  const double m = static_cast<double>(x.rows);
  Mat y(x.rows, x.cols);
  std::vector<double> mean(static_cast<std::size_t>(c_count), 0.0);
  std::vector<double> var(static_cast<std::size_t>(c_count), 0.0);
  if (train) {
    for (int r = 0; r < x.rows; ++r) {
      const double* row = x.row(r);
      for (int c = 0; c < c_count; ++c) mean[static_cast<std::size_t>(c)] += row[c];
    }
    for (auto& v : mean) v /= m;
    for (int r = 0; r < x.rows; ++r) {
      const double* row = x.row(r);
      for (int c = 0; c < c_count; ++c) {
        const double d = row[c] - mean[static_cast<std::size_t>(c)];
        var[static_cast<std::size_t>(c)] += d * d;
      }
    }
    for (auto& v : var) v /= m;
    if (update_running) {
      for (int c = 0; c < c_count; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        p.running_mean[ci] = momentum * p.running_mean[ci] + (1 - momentum) * mean[ci];
        p.running_var[ci] = momentum * p.running_var[ci] + (1 - momentum) * var[ci];
      }
    }
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  std::vector<double> inv_std(static_cast<std::size_t>(c_count));
  for (int c = 0; c < c_count; ++c) {
    inv_std[static_cast<std::size_t>(c)] =
        1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + eps);
  }
  Mat xhat(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* hr = xhat.row(r);
    double* yr = y.row(r);
    for (int c = 0; c < c_count; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      hr[c] = (xr[c] - mean[ci]) * inv_std[ci];
      yr[c] = p.gamma[ci] * hr[c] + p.beta[ci];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

/// Train-mode backward through the batch statistics.
inline Mat bn_backward(const BnParam& p, BnParam& grad, const BnCache& cache,
                       const Mat& dy) {
  const int c_count = dy.cols;
  const double m = static_cast<double>(dy.rows);
  std::vector<double> sum_dy(static_cast<std::size_t>(c_count), 0.0);
  std::vector<double> sum_dy_xhat(static_cast<std::size_t>(c_count), 0.0);
  for (int r = 0; r < dy.rows; ++r) {
    const double* dr = dy.row(r);
    const double* hr = cache.xhat.row(r);
    for (int c = 0; c < c_count; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      sum_dy[ci] += dr[c];
      sum_dy_xhat[ci] += dr[c] * hr[c];
    }
  }
  for (int c = 0; c < c_count; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    grad.gamma[ci] += sum_dy_xhat[ci];
    grad.beta[ci] += sum_dy[ci];
  }
  Mat dx(dy.rows, dy.cols);
  for (int r = 0; r < dy.rows; ++r) {
    const double* dr = dy.row(r);
    const double* hr = cache.xhat.row(r);
    double* out = dx.row(r);
    for (int c = 0; c < c_count; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      out[c] = p.gamma[ci] * cache.inv_std[ci] *
               (dr[c] - sum_dy[ci] / m - hr[c] * sum_dy_xhat[ci] / m);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

inline void relu_inplace(Mat& x) {
  for (double& v : x.v) v = v > 0 ? v : 0.0;
}

/// dx = dy masked by the post-activation values.
inline Mat relu_backward(const Mat& activated, const Mat& dy) {
  Mat dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i) {
    if (activated.v[i] <= 0) dx.v[i] = 0.0;
  }
  return dx;
}

/// Inverted dropout; mask entries are 0 or 1/keep. A non-empty mask is
/// reused as-is (gradient checks replay the same mask).
inline void dropout_forward(Mat& x, double keep, Rng* rng, Mat& mask) {
  if (mask.v.empty()) {
    if (!rng) throw std::invalid_argument("dropout: no rng and no preset mask");
    mask = Mat(x.rows, x.cols);
    for (double& m : mask.v) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] *= mask.v[i];
}

inline Mat dropout_backward(const Mat& mask, const Mat& dy) {
  Mat dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask.v[i];
  return dx;
}

/// Channelwise max over each group of `group` consecutive rows.
inline Mat maxpool_rows(const Mat& x, int group, std::vector<int>& argmax) {
  const int batches = x.rows / group;
  Mat y(batches, x.cols);
  argmax.assign(static_cast<std::size_t>(batches) * x.cols, 0);
  for (int b = 0; b < batches; ++b) {
    for (int c = 0; c < x.cols; ++c) {
      double best = x.at(b * group, c);
      int best_r = b * group;
      for (int r = b * group + 1; r < (b + 1) * group; ++r) {
        if (x.at(r, c) > best) {
          best = x.at(r, c);
          best_r = r;
        }
      }
      y.at(b, c) = best;
      argmax[static_cast<std::size_t>(b) * x.cols + c] = best_r;
    }
  }
  return y;
}

inline Mat maxpool_rows_backward(const Mat& dy, int group,
                                 const std::vector<int>& argmax) {
  Mat dx(dy.rows * group, dy.cols);
  for (int b = 0; b < dy.rows; ++b) {
    for (int c = 0; c < dy.cols; ++c) {
      dx.at(argmax[static_cast<std::size_t>(b) * dy.cols + c], c) += dy.at(b, c);
    }
  }
  return dx;
}

inline Mat softmax_rows(const Mat& logits) {
  Mat probs(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) {
    const double* in = logits.row(r);
    double* out = probs.row(r);
    double mx = in[0];
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, in[c]);
    double sum = 0;
    for (int c = 0; c < logits.cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    for (int c = 0; c < logits.cols; ++c) out[c] /= sum;
  }
  return probs;
}

/// Mean negative log probability of the true class. Probabilities below
/// 1e-12 are clamped; `clamped` (if given) counts how often that fired.
inline double nll_loss(const Mat& probs, const std::vector<int>& labels,
                       std::size_t* clamped = nullptr) {
  if (static_cast<std::size_t>(probs.rows) != labels.size()) {
    throw std::invalid_argument("nll_loss: batch size mismatch");
  }
  double total = 0;
  for (int r = 0; r < probs.rows; ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= probs.cols) {
      throw std::invalid_argument("nll_loss: label out of range");
    }
    double p = probs.at(r, label);
    if (p < 1e-12) {
      p = 1e-12;
      if (clamped) ++*clamped;
    }
    total -= std::log(p);
  }
  return total / probs.rows;
}

/// Gradient of nll_loss(softmax(logits)) w.r.t. the logits.
inline Mat softmax_nll_backward(const Mat& probs,
                                const std::vector<int>& labels) {
  Mat d = probs;
  const double inv_b = 1.0 / probs.rows;
  for (int r = 0; r < probs.rows; ++r) {
    d.at(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    for (int c = 0; c < probs.cols; ++c) d.at(r, c) *= inv_b;
  }
  return d;
}

}  // namespace nn
}  // namespace pointprop

#endif  // POINTPROP_NN_HPP
