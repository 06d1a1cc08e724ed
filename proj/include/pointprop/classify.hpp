// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the pointprop authors
//
// Lightweight point-set classifier: input normalization, a 3x3 input
// transform network, a shared per-point MLP with channelwise max pooling,
// and a dense head over five classes. Training is plain backprop + Adam
// with negative log-likelihood loss; everything runs in double precision
// on the CPU.

#ifndef POINTPROP_CLASSIFY_HPP
#define POINTPROP_CLASSIFY_HPP

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pointprop/core.hpp"
#include "pointprop/nn.hpp"

namespace pointprop {

struct ClassifierConfig {
  int n_points = 100;
  std::vector<int> point_mlp = {64, 128, 1024};
  std::vector<int> head = {512, 256};
  std::vector<int> tnet_mlp = {64, 128, 1024};
  std::vector<int> tnet_head = {512, 256};
  int n_classes = 5;
  double dropout_keep = 0.7;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;

  /// Shrunken network for fast tests; same layer types, same code paths.
  static ClassifierConfig tiny() {
    ClassifierConfig cfg;
    cfg.n_points = 12;
    cfg.point_mlp = {8, 16, 32};
    cfg.head = {16, 8};
    cfg.tnet_mlp = {8, 16, 32};
    cfg.tnet_head = {16, 8};
    return cfg;
  }
};

struct MlpStackParam {
  std::vector<nn::DenseParam> fc;
  std::vector<nn::BnParam> bn;
};

struct TNetParam {
  MlpStackParam mlp;
  nn::DenseParam fc1, fc2, fc3;
  nn::BnParam bn1, bn2;
};

struct ClassifierModel {
  ClassifierConfig cfg;
  TNetParam tnet;
  MlpStackParam mlp;
  nn::DenseParam fc1, fc2, fc3;
  nn::BnParam bn1, bn2;
};

namespace detail {

inline void glorot_init(nn::DenseParam& d, Rng& rng) {
  const double limit = std::sqrt(6.0 / (d.w.rows + d.w.cols));
  for (double& w : d.w.v) w = rng.uniform(-limit, limit);
}

inline MlpStackParam make_stack(int in, const std::vector<int>& widths,
                                Rng& rng) {
  MlpStackParam s;
  int prev = in;
  for (int width : widths) {
    nn::DenseParam d(prev, width);
    glorot_init(d, rng);
    s.fc.push_back(std::move(d));
    s.bn.emplace_back(width);
    prev = width;
  }
  return s;
}

}  // namespace detail

/// Fresh model. The transform net's last layer is zero-weighted with an
/// identity bias, so it emits the 3x3 identity until trained.
inline ClassifierModel make_classifier(const ClassifierConfig& cfg,
                                       std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ 0x5ca1ab1e0ddba11ull));
  ClassifierModel m;
  m.cfg = cfg;
  m.tnet.mlp = detail::make_stack(3, cfg.tnet_mlp, rng);
  m.tnet.fc1 = nn::DenseParam(cfg.tnet_mlp.back(), cfg.tnet_head[0]);
  m.tnet.fc2 = nn::DenseParam(cfg.tnet_head[0], cfg.tnet_head[1]);
  m.tnet.fc3 = nn::DenseParam(cfg.tnet_head[1], 9);
  detail::glorot_init(m.tnet.fc1, rng);
  detail::glorot_init(m.tnet.fc2, rng);
  // fc3 stays zero; identity bias.
  m.tnet.fc3.b = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  m.tnet.bn1 = nn::BnParam(cfg.tnet_head[0]);
  m.tnet.bn2 = nn::BnParam(cfg.tnet_head[1]);

  m.mlp = detail::make_stack(3, cfg.point_mlp, rng);
  m.fc1 = nn::DenseParam(cfg.point_mlp.back(), cfg.head[0]);
  m.fc2 = nn::DenseParam(cfg.head[0], cfg.head[1]);
  m.fc3 = nn::DenseParam(cfg.head[1], cfg.n_classes);
  detail::glorot_init(m.fc1, rng);
  detail::glorot_init(m.fc2, rng);
  detail::glorot_init(m.fc3, rng);
  m.bn1 = nn::BnParam(cfg.head[0]);
  m.bn2 = nn::BnParam(cfg.head[1]);
  return m;
}

/// Visit every trainable array, in a fixed order shared by gradients,
/// optimizer moments and serialization.
template <typename Model, typename Fn>
void visit_params(Model& m, Fn&& fn) {
  auto dense = [&](auto& d, const std::string& name) {
    fn(name + ".w", d.w.v);
    fn(name + ".b", d.b);
  };
  auto bnorm = [&](auto& b, const std::string& name) {
    fn(name + ".gamma", b.gamma);
    fn(name + ".beta", b.beta);
  };
  auto stack = [&](auto& s, const std::string& name) {
    for (std::size_t i = 0; i < s.fc.size(); ++i) {
      dense(s.fc[i], name + ".fc" + std::to_string(i));
      bnorm(s.bn[i], name + ".bn" + std::to_string(i));
    }
  };
  stack(m.tnet.mlp, "tnet.mlp");
  dense(m.tnet.fc1, "tnet.fc1");
  bnorm(m.tnet.bn1, "tnet.bn1");
  dense(m.tnet.fc2, "tnet.fc2");
  bnorm(m.tnet.bn2, "tnet.bn2");
  dense(m.tnet.fc3, "tnet.fc3");
  stack(m.mlp, "mlp");
  dense(m.fc1, "fc1");
  bnorm(m.bn1, "bn1");
  dense(m.fc2, "fc2");
  bnorm(m.bn2, "bn2");
  dense(m.fc3, "fc3");
}

/// visit_params plus batch-norm running statistics (full persisted state).
template <typename Model, typename Fn>
void visit_state(Model& m, Fn&& fn) {
  visit_params(m, fn);
  auto stats = [&](auto& b, const std::string& name) {
    fn(name + ".running_mean", b.running_mean);
    fn(name + ".running_var", b.running_var);
  };
  for (std::size_t i = 0; i < m.tnet.mlp.bn.size(); ++i) {
    stats(m.tnet.mlp.bn[i], "tnet.mlp.bn" + std::to_string(i));
  }
  stats(m.tnet.bn1, "tnet.bn1");
  stats(m.tnet.bn2, "tnet.bn2");
  for (std::size_t i = 0; i < m.mlp.bn.size(); ++i) {
    stats(m.mlp.bn[i], "mlp.bn" + std::to_string(i));
  }
  stats(m.bn1, "bn1");
  stats(m.bn2, "bn2");
}

inline ClassifierModel zeros_like(const ClassifierModel& model) {
  ClassifierModel z = model;
  visit_state(z, [](const std::string&, std::vector<double>& v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return z;
}

// ---------------------------------------------------------------------------
// Input preparation.
// ---------------------------------------------------------------------------

/// Center on the centroid and scale so the furthest point sits at norm 1.
/// Coincident point sets collapse to the origin.
inline std::vector<Point3> normalize_proposal(const std::vector<Point3>& pts) {
  if (pts.empty()) throw std::invalid_argument("normalize: empty proposal");
  double cx = 0, cy = 0, cz = 0;
  for (const Point3& p : pts) {
    cx += p.x;
    cy += p.y;
    cz += p.z;
  }
  const double n = static_cast<double>(pts.size());
  cx /= n;
  cy /= n;
  cz /= n;
  double max_norm = 0;
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const Point3& p : pts) {
    Point3 q{p.x - cx, p.y - cy, p.z - cz, p.intensity};
    max_norm = std::max(max_norm, q.norm());
    out.push_back(q);
  }
  if (max_norm < 1e-12) {
    for (Point3& q : out) q.x = q.y = q.z = 0;
    return out;
  }
  for (Point3& q : out) {
    q.x /= max_norm;
    q.y /= max_norm;
    q.z /= max_norm;
  }
  return out;
}

/// Rotate about z through the origin, then scale uniformly.
inline std::vector<Point3> augment_with(const std::vector<Point3>& pts,
                                        double theta, double scale) {
  const double c = std::cos(theta), s = std::sin(theta);
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const Point3& p : pts) {
    out.push_back({scale * (c * p.x - s * p.y), scale * (s * p.x + c * p.y),
                   scale * p.z, p.intensity});
  }
  return out;
}

/// Random rotation in [-pi/4, pi/4] and scale in [0.95, 1.05].
inline std::vector<Point3> augment(const std::vector<Point3>& pts, Rng& rng) {
  const double theta = rng.uniform(-M_PI / 4, M_PI / 4);
  const double scale = rng.uniform(0.95, 1.05);
  return augment_with(pts, theta, scale);
}

inline std::vector<Point3> augment(const std::vector<Point3>& pts,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return augment(pts, rng);
}

/// Pack a batch of equally sized point sets into a (B*N)x3 matrix.
inline nn::Mat to_matrix(const std::vector<std::vector<Point3>>& batch) {
  if (batch.empty()) throw std::invalid_argument("to_matrix: empty batch");
  const std::size_t n = batch.front().size();
  nn::Mat x(static_cast<int>(batch.size() * n), 3);
  int r = 0;
  for (const auto& pts : batch) {
    if (pts.size() != n) {
      throw std::invalid_argument("to_matrix: ragged batch");
    }
    for (const Point3& p : pts) {
      x.at(r, 0) = p.x;
      x.at(r, 1) = p.y;
      x.at(r, 2) = p.z;
      ++r;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Forward / backward.
// ---------------------------------------------------------------------------

struct StackCtx {
  std::vector<nn::Mat> act;  // act[0] = input, act[l+1] = post-relu of layer l
  std::vector<nn::BnCache> bn;
};

namespace detail {

inline nn::Mat stack_forward(MlpStackParam& p, const nn::Mat& x, bool train,
                             const ClassifierConfig& cfg, bool update_running,
                             StackCtx* ctx) {
  if (ctx) {
    ctx->act.clear();
    ctx->bn.assign(p.fc.size(), {});
    ctx->act.push_back(x);
  }
  nn::Mat cur = x;
  for (std::size_t l = 0; l < p.fc.size(); ++l) {
    nn::Mat z = nn::dense_forward(p.fc[l], cur);
    cur = nn::bn_forward(p.bn[l], z, train, cfg.bn_eps, cfg.bn_momentum,
                         update_running, ctx ? &ctx->bn[l] : nullptr);
    nn::relu_inplace(cur);
    if (ctx) ctx->act.push_back(cur);
  }
  return cur;
}

inline nn::Mat stack_backward(const MlpStackParam& p, MlpStackParam& grad,
                              const StackCtx& ctx, nn::Mat dtop) {
  nn::Mat d = std::move(dtop);
  for (std::size_t l = p.fc.size(); l-- > 0;) {
    d = nn::relu_backward(ctx.act[l + 1], d);
    d = nn::bn_backward(p.bn[l], grad.bn[l], ctx.bn[l], d);
    d = nn::dense_backward(p.fc[l], grad.fc[l], ctx.act[l], d);
  }
  return d;
}

/// out_row = in_row * T_b for every point row of batch b.
inline nn::Mat apply_transform(const nn::Mat& x, const nn::Mat& transforms,
                               int n_points) {
  nn::Mat out(x.rows, 3);
  for (int r = 0; r < x.rows; ++r) {
    const double* t = transforms.row(r / n_points);
    const double* in = x.row(r);
    double* o = out.row(r);
    for (int c = 0; c < 3; ++c) {
      o[c] = in[0] * t[c] + in[1] * t[3 + c] + in[2] * t[6 + c];
    }
  }
  return out;
}

inline nn::Mat transform_backward(const nn::Mat& x, const nn::Mat& d_out,
                                  int n_points) {
  const int batches = x.rows / n_points;
  nn::Mat d_t(batches, 9);
  for (int r = 0; r < x.rows; ++r) {
    double* dt = d_t.row(r / n_points);
    const double* in = x.row(r);
    const double* d = d_out.row(r);
    for (int i = 0; i < 3; ++i) {
      for (int c = 0; c < 3; ++c) dt[3 * i + c] += in[i] * d[c];
    }
  }
  return d_t;
}

}  // namespace detail

struct ForwardCtx {
  bool train = false;
  bool update_running = true;
  Rng* rng = nullptr;  // dropout mask source; masks are reused if present
  int batch = 0;

  nn::Mat input;
  StackCtx tnet_mlp;
  std::vector<int> tnet_argmax;
  nn::Mat tnet_pool, tnet_h1, tnet_h2;
  nn::BnCache tnet_bn1, tnet_bn2;
  nn::Mat transform;    // batch x 9
  nn::Mat transformed;  // (batch*n_points) x 3
  StackCtx mlp;
  std::vector<int> argmax;
  nn::Mat pool;
  nn::Mat h1_relu, h1_out, h2_relu, h2_out;
  nn::BnCache bn1c, bn2c;
  nn::Mat drop_mask1, drop_mask2;
  nn::Mat probs;
};

/// Run the full network on a (B*n_points)x3 matrix of normalized points.
/// Train mode uses batch statistics and dropout (ctx required, with an rng
/// unless masks are preseeded); inference uses running statistics. Rows of
/// the result are class probabilities summing to 1.
inline nn::Mat forward(ClassifierModel& model, const nn::Mat& x, bool train,
                       ForwardCtx* ctx) {
  const ClassifierConfig& cfg = model.cfg;
  if (x.cols != 3 || x.rows % cfg.n_points != 0) {
    throw std::invalid_argument("forward: expected (B*n_points) x 3 input");
  }
  if (train && !ctx) {
    throw std::invalid_argument("forward: train mode needs a context");
  }
  const int batch = x.rows / cfg.n_points;
  const bool update = train && ctx && ctx->update_running;
  if (ctx) {
    ctx->train = train;
    ctx->batch = batch;
    ctx->input = x;
  }

  // Transform branch.
  nn::Mat t = detail::stack_forward(model.tnet.mlp, x, train, cfg, update,
                                    ctx ? &ctx->tnet_mlp : nullptr);
  std::vector<int> t_argmax;
  nn::Mat t_pool = nn::maxpool_rows(t, cfg.n_points, t_argmax);
  nn::Mat th1 = nn::dense_forward(model.tnet.fc1, t_pool);
  th1 = nn::bn_forward(model.tnet.bn1, th1, train, cfg.bn_eps, cfg.bn_momentum,
                       update, ctx ? &ctx->tnet_bn1 : nullptr);
  nn::relu_inplace(th1);
  nn::Mat th2 = nn::dense_forward(model.tnet.fc2, th1);
  th2 = nn::bn_forward(model.tnet.bn2, th2, train, cfg.bn_eps, cfg.bn_momentum,
                       update, ctx ? &ctx->tnet_bn2 : nullptr);
  nn::relu_inplace(th2);
  nn::Mat transforms = nn::dense_forward(model.tnet.fc3, th2);
  nn::Mat xt = detail::apply_transform(x, transforms, cfg.n_points);

  if (ctx) {
    ctx->tnet_argmax = std::move(t_argmax);
    ctx->tnet_pool = std::move(t_pool);
    ctx->tnet_h1 = std::move(th1);
    ctx->tnet_h2 = std::move(th2);
    ctx->transform = transforms;
    ctx->transformed = xt;
  }

  // Main branch.
  nn::Mat feat = detail::stack_forward(model.mlp, xt, train, cfg, update,
                                       ctx ? &ctx->mlp : nullptr);
  std::vector<int> argmax;
  nn::Mat pool = nn::maxpool_rows(feat, cfg.n_points, argmax);

  nn::Mat h1 = nn::dense_forward(model.fc1, pool);
  h1 = nn::bn_forward(model.bn1, h1, train, cfg.bn_eps, cfg.bn_momentum,
                      update, ctx ? &ctx->bn1c : nullptr);
  nn::relu_inplace(h1);
  if (ctx) ctx->h1_relu = h1;
  if (train) {
    nn::dropout_forward(h1, cfg.dropout_keep, ctx->rng, ctx->drop_mask1);
  }
  if (ctx) ctx->h1_out = h1;

  nn::Mat h2 = nn::dense_forward(model.fc2, h1);
  h2 = nn::bn_forward(model.bn2, h2, train, cfg.bn_eps, cfg.bn_momentum,
                      update, ctx ? &ctx->bn2c : nullptr);
  nn::relu_inplace(h2);
  if (ctx) ctx->h2_relu = h2;
  if (train) {
    nn::dropout_forward(h2, cfg.dropout_keep, ctx->rng, ctx->drop_mask2);
  }
  if (ctx) ctx->h2_out = h2;

  nn::Mat logits = nn::dense_forward(model.fc3, h2);
  for (double v : logits.v) {
    if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite activation");
  }
  nn::Mat probs = nn::softmax_rows(logits);
  if (ctx) {
    ctx->argmax = std::move(argmax);
    ctx->pool = std::move(pool);
    ctx->probs = probs;
  }
  return probs;
}

/// The 3x3 transforms the transform branch would apply, inference mode.
/// One row-major 3x3 matrix per batch element.
inline nn::Mat tnet_forward(ClassifierModel& model, const nn::Mat& x) {
  const ClassifierConfig& cfg = model.cfg;
  nn::Mat t = detail::stack_forward(model.tnet.mlp, x, false, cfg, false, nullptr);
  std::vector<int> argmax;
  nn::Mat pool = nn::maxpool_rows(t, cfg.n_points, argmax);
  nn::Mat h1 = nn::dense_forward(model.tnet.fc1, pool);
  h1 = nn::bn_forward(model.tnet.bn1, h1, false, cfg.bn_eps, cfg.bn_momentum,
                      false, nullptr);
  nn::relu_inplace(h1);
  nn::Mat h2 = nn::dense_forward(model.tnet.fc2, h1);
  h2 = nn::bn_forward(model.tnet.bn2, h2, false, cfg.bn_eps, cfg.bn_momentum,
                      false, nullptr);
  nn::relu_inplace(h2);
  return nn::dense_forward(model.tnet.fc3, h2);
}

/// Backprop from softmax+NLL through the whole network. Returns gradients
/// in a zeros_like(model) container; ctx must come from a train-mode forward.
inline ClassifierModel backward(const ClassifierModel& model,
                                const ForwardCtx& ctx,
                                const std::vector<int>& labels) {
  ClassifierModel grad = zeros_like(model);
  const int n_points = model.cfg.n_points;

  nn::Mat d = nn::softmax_nll_backward(ctx.probs, labels);
  d = nn::dense_backward(model.fc3, grad.fc3, ctx.h2_out, d);
  if (!ctx.drop_mask2.v.empty()) d = nn::dropout_backward(ctx.drop_mask2, d);
  d = nn::relu_backward(ctx.h2_relu, d);
  d = nn::bn_backward(model.bn2, grad.bn2, ctx.bn2c, d);
  d = nn::dense_backward(model.fc2, grad.fc2, ctx.h1_out, d);
  if (!ctx.drop_mask1.v.empty()) d = nn::dropout_backward(ctx.drop_mask1, d);
  d = nn::relu_backward(ctx.h1_relu, d);
  d = nn::bn_backward(model.bn1, grad.bn1, ctx.bn1c, d);
  d = nn::dense_backward(model.fc1, grad.fc1, ctx.pool, d);
  d = nn::maxpool_rows_backward(d, n_points, ctx.argmax);
  d = detail::stack_backward(model.mlp, grad.mlp, ctx.mlp, std::move(d));

  // d is now the gradient w.r.t. the transformed points; route it into the
  // transform branch (the direct path into the raw input is not needed).
  nn::Mat dt = detail::transform_backward(ctx.input, d, n_points);
  dt = nn::dense_backward(model.tnet.fc3, grad.tnet.fc3, ctx.tnet_h2, dt);
  dt = nn::relu_backward(ctx.tnet_h2, dt);
  dt = nn::bn_backward(model.tnet.bn2, grad.tnet.bn2, ctx.tnet_bn2, dt);
  dt = nn::dense_backward(model.tnet.fc2, grad.tnet.fc2, ctx.tnet_h1, dt);
  dt = nn::relu_backward(ctx.tnet_h1, dt);
  dt = nn::bn_backward(model.tnet.bn1, grad.tnet.bn1, ctx.tnet_bn1, dt);
  dt = nn::dense_backward(model.tnet.fc1, grad.tnet.fc1, ctx.tnet_pool, dt);
  dt = nn::maxpool_rows_backward(dt, n_points, ctx.tnet_argmax);
  detail::stack_backward(model.tnet.mlp, grad.tnet.mlp, ctx.tnet_mlp,
                         std::move(dt));
  return grad;
}

// ---------------------------------------------------------------------------
// Adam.
// ---------------------------------------------------------------------------

struct TrainingConfig {
  double base_lr = 2e-4;
  double decay = 0.8;
  long decay_steps = 18570;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 1;
  bool augment = true;
  double target_train_accuracy = -1.0;  // early stop when reached; <0 = off
};

/// base_lr * decay^floor(step / decay_steps), with an exact integer power.
inline double learning_rate_at(const TrainingConfig& cfg, long step) {
  long n = step / cfg.decay_steps;
  double f = 1.0;
  for (; n > 0; --n) f *= cfg.decay;
  return cfg.base_lr * f;
}

struct AdamState {
  ClassifierModel m1, m2;
  long step = 0;
  double beta1_t = 1.0, beta2_t = 1.0;
};

inline AdamState make_adam(const ClassifierModel& model) {
  return {zeros_like(model), zeros_like(model), 0, 1.0, 1.0};
}

inline void adam_step(ClassifierModel& model, const ClassifierModel& grads,
                      AdamState& state, const TrainingConfig& cfg) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double lr = learning_rate_at(cfg, state.step);
  state.beta1_t *= kBeta1;
  state.beta2_t *= kBeta2;
  const double bc1 = 1.0 - state.beta1_t;
  const double bc2 = 1.0 - state.beta2_t;

  std::vector<std::vector<double>*> p, g, m1, m2;
  auto collect = [](auto& model_ref, std::vector<std::vector<double>*>& out) {
    visit_params(model_ref, [&](const std::string&, auto& v) {
      out.push_back(const_cast<std::vector<double>*>(&v));
    });
  };
  collect(model, p);
  collect(const_cast<ClassifierModel&>(grads), g);
  collect(state.m1, m1);
  collect(state.m2, m2);

  for (std::size_t a = 0; a < p.size(); ++a) {
    auto& pv = *p[a];
    auto& gv = *g[a];
    auto& mv = *m1[a];
    auto& vv = *m2[a];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = kBeta1 * mv[i] + (1 - kBeta1) * gv[i];
      vv[i] = kBeta2 * vv[i] + (1 - kBeta2) * gv[i] * gv[i];
      const double mhat = mv[i] / bc1;
      const double vhat = vv[i] / bc2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
  }
  ++state.step;
}

// ---------------------------------------------------------------------------
// Training / inference.
// ---------------------------------------------------------------------------

struct TrainSample {
  std::vector<Point3> points;
  int label = 0;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;  // NaN when no validation set
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  long steps = 0;
};

namespace detail {

inline nn::Mat batch_matrix(const std::vector<TrainSample>& set,
                            const std::vector<std::size_t>& idx, int n_points,
                            bool augment_on, Rng& rng,
                            std::vector<int>& labels) {
  std::vector<std::vector<Point3>> prepared;
  prepared.reserve(idx.size());
  labels.clear();
  for (std::size_t i : idx) {
    auto pts = sample_points(set[i].points, static_cast<std::size_t>(n_points),
                             rng.next_u64());
    pts = normalize_proposal(pts);
    if (augment_on) pts = augment(pts, rng);
    prepared.push_back(std::move(pts));
    labels.push_back(set[i].label);
  }
  return to_matrix(prepared);
}

}  // namespace detail

/// Classification accuracy of the model on a sample set (inference mode,
/// deterministic point sampling).
inline double evaluate_accuracy(ClassifierModel& model,
                                const std::vector<TrainSample>& set,
                                std::uint64_t sample_seed) {
  if (set.empty()) return 0.0;
  const int n_points = model.cfg.n_points;
  std::size_t correct = 0;
  const std::size_t chunk = 64;
  for (std::size_t begin = 0; begin < set.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, set.size());
    std::vector<std::vector<Point3>> prepared;
    prepared.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      auto pts = sample_points(set[i].points, static_cast<std::size_t>(n_points),
                               splitmix64(sample_seed ^ (0x9e37 + i)));
      prepared.push_back(normalize_proposal(pts));
    }
    nn::Mat probs = forward(model, to_matrix(prepared), false, nullptr);
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = probs.row(static_cast<int>(i - begin));
      int best = 0;
      for (int c = 1; c < probs.cols; ++c) {
        if (row[c] > row[best]) best = c;
      }
      if (best == set[i].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

/// Shuffled mini-batch training: sample -> normalize -> augment -> forward /
/// backward / adam. Deterministic for a fixed config seed. Stops early once
/// the train accuracy reaches cfg.target_train_accuracy (if set).
inline TrainResult train_classifier(ClassifierModel& model,
                                    const std::vector<TrainSample>& train_set,
                                    const std::vector<TrainSample>& val_set,
                                    const TrainingConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  for (const TrainSample& s : train_set) {
    if (s.label < 0 || s.label >= model.cfg.n_classes) {
      throw std::invalid_argument("train: label out of range");
    }
    if (s.points.empty()) throw std::invalid_argument("train: empty sample");
  }

  Rng rng(splitmix64(cfg.seed ^ 0x7261696e5f726e67ull));
  const std::uint64_t eval_seed = splitmix64(cfg.seed ^ 0x6576616c5f726e67ull);
  AdamState adam = make_adam(model);
  TrainResult result;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          begin + static_cast<std::size_t>(cfg.batch_size), order.size());
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      nn::Mat x = detail::batch_matrix(train_set, idx, model.cfg.n_points,
                                       cfg.augment, rng, labels);
      ForwardCtx ctx;
      ctx.rng = &rng;
      nn::Mat probs = forward(model, x, true, &ctx);
      loss_sum += nn::nll_loss(probs, labels);
      ClassifierModel grads = backward(model, ctx, labels);
      adam_step(model, grads, adam, cfg);
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / std::max(batches, 1);
    stats.train_accuracy = evaluate_accuracy(model, train_set, eval_seed);
    stats.val_accuracy = val_set.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : evaluate_accuracy(model, val_set, eval_seed);
    result.epochs.push_back(stats);
    result.steps = adam.step;
    if (cfg.target_train_accuracy > 0 &&
        stats.train_accuracy >= cfg.target_train_accuracy) {
      break;
    }
  }
  return result;
}

struct Prediction {
  int label = 0;
  double probability = 0;
  std::vector<double> probs;
};

/// Argmax class per point set (pure inference; deterministic sampling).
inline std::vector<Prediction> predict(ClassifierModel& model,
                                       const std::vector<std::vector<Point3>>& sets,
                                       std::uint64_t sample_seed = 1) {
  std::vector<Prediction> out;
  if (sets.empty()) return out;
  const int n_points = model.cfg.n_points;
  std::vector<std::vector<Point3>> prepared;
  prepared.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto pts = sample_points(sets[i], static_cast<std::size_t>(n_points),
                             splitmix64(sample_seed ^ (0x517cc1 + i)));
    prepared.push_back(normalize_proposal(pts));
  }
  nn::Mat probs = forward(model, to_matrix(prepared), false, nullptr);
  for (int r = 0; r < probs.rows; ++r) {
    Prediction pred;
    const double* row = probs.row(r);
    pred.probs.assign(row, row + probs.cols);
    for (int c = 0; c < probs.cols; ++c) {
      if (row[c] > pred.probability) {
        pred.probability = row[c];
        pred.label = c;
      }
    }
    out.push_back(std::move(pred));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: plain-text header (layer shapes) + packed float64 payload.
// ---------------------------------------------------------------------------

inline void save_model(const ClassifierModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("model: cannot write " + path);
  const ClassifierConfig& cfg = model.cfg;
  auto ints = [&](const char* key, const std::vector<int>& v) {
    out << key;
    for (int x : v) out << ' ' << x;
    out << '\n';
  };
  out << "pointprop_model 1\n";
  out << "n_points " << cfg.n_points << '\n';
  out << "n_classes " << cfg.n_classes << '\n';
  ints("point_mlp", cfg.point_mlp);
  ints("head", cfg.head);
  ints("tnet_mlp", cfg.tnet_mlp);
  ints("tnet_head", cfg.tnet_head);
  out << std::hexfloat;
  out << "dropout_keep " << cfg.dropout_keep << '\n';
  out << "bn_eps " << cfg.bn_eps << '\n';
  out << "bn_momentum " << cfg.bn_momentum << '\n';
  out << std::defaultfloat;
  visit_state(const_cast<ClassifierModel&>(model),
              [&](const std::string& name, const std::vector<double>& v) {
                out << "tensor " << name << ' ' << v.size() << '\n';
              });
  out << "data\n";
  visit_state(const_cast<ClassifierModel&>(model),
              [&](const std::string&, const std::vector<double>& v) {
                out.write(reinterpret_cast<const char*>(v.data()),
                          static_cast<std::streamsize>(v.size() * sizeof(double)));
              });
}

inline ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "pointprop_model 1") {
    throw std::runtime_error("model: bad magic in " + path);
  }
  ClassifierConfig cfg;
  std::vector<std::pair<std::string, std::size_t>> tensors;
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto read_ints = [&](std::vector<int>& v) {
      v.clear();
      int x;
      while (ls >> x) v.push_back(x);
    };
    if (key == "n_points") ls >> cfg.n_points;
    else if (key == "n_classes") ls >> cfg.n_classes;
    else if (key == "point_mlp") read_ints(cfg.point_mlp);
    else if (key == "head") read_ints(cfg.head);
    else if (key == "tnet_mlp") read_ints(cfg.tnet_mlp);
    else if (key == "tnet_head") read_ints(cfg.tnet_head);
    else if (key == "dropout_keep") ls >> cfg.dropout_keep;
    else if (key == "bn_eps") ls >> cfg.bn_eps;
    else if (key == "bn_momentum") ls >> cfg.bn_momentum;
    else if (key == "tensor") {
      std::string name;
      std::size_t size;
      ls >> name >> size;
      tensors.emplace_back(name, size);
    } else {
      throw std::runtime_error("model: unknown header key '" + key + "'");
    }
  }
  ClassifierModel model = make_classifier(cfg, 0);
  std::size_t cursor = 0;
  visit_state(model, [&](const std::string& name, std::vector<double>& v) {
    if (cursor >= tensors.size() || tensors[cursor].first != name ||
        tensors[cursor].second != v.size()) {
      throw std::runtime_error("model: layout mismatch at " + name);
    }
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    ++cursor;
  });
  if (!in || cursor != tensors.size()) {
    throw std::runtime_error("model: truncated payload in " + path);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training-set container: per record, a label byte, a uint32 point count and
// packed float32 xyz triples (little-endian).
// ---------------------------------------------------------------------------

inline void save_dataset(const std::vector<TrainSample>& samples,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  for (const TrainSample& s : samples) {
    const auto label = static_cast<unsigned char>(s.label);
    const auto count = static_cast<std::uint32_t>(s.points.size());
    out.put(static_cast<char>(label));
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const Point3& p : s.points) {
      const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                            static_cast<float>(p.z)};
      out.write(reinterpret_cast<const char*>(xyz), 12);
    }
  }
}

inline std::vector<TrainSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::vector<TrainSample> samples;
  for (;;) {
    const int label = in.get();
    if (label == EOF) break;
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw std::runtime_error("dataset: truncated record in " + path);
    TrainSample s;
    s.label = label;
    s.points.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      float xyz[3];
      in.read(reinterpret_cast<char*>(xyz), 12);
      if (!in) throw std::runtime_error("dataset: truncated record in " + path);
      s.points[i] = {xyz[0], xyz[1], xyz[2], 0.0f};
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace pointprop

#endif  // POINTPROP_CLASSIFY_HPP
