// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// The neural scorer: 16 dense inputs + sparse indicators, an optional
// hidden layer, one sigmoid output. Exact backprop and AdaGrad updates,
// all in 64-bit floats.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "faqrank/features.hpp"
#include "faqrank/util.hpp"

namespace faqrank {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// The output must stay strictly inside (0,1) even when the raw sigmoid
// saturates to 0.0 or 1.0 in double precision.
inline double output_sigmoid(double z) {
  return std::clamp(sigmoid(z), 1e-15, 1.0 - 1e-15);
}

}  // namespace detail

enum class HiddenActivation { Tanh, Sigmoid };

struct ScoringModel {
  std::size_t input_dim = kDenseDim;
  std::size_t hidden_dim = 0;  // 0 = no hidden layer
  HiddenActivation activation = HiddenActivation::Tanh;
  std::uint64_t seed = 0;

  // hidden_dim > 0: w1 is hidden_dim x input_dim row-major, w2 over hidden
  // units. hidden_dim == 0: w1/b1 empty, w2 over inputs directly.
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  // AdaGrad accumulators, same shapes.
  std::vector<double> acc_w1, acc_b1, acc_w2;
  double acc_b2 = 0.0;

  std::size_t max_sparse() const { return input_dim - kDenseDim; }
};

// Weights uniform in [-0.01, 0.01] from the seeded generator; biases and
// accumulators zero.
inline ScoringModel init_model(std::size_t input_dim, std::size_t hidden_dim,
                               std::uint64_t seed,
                               HiddenActivation activation = HiddenActivation::Tanh) {
  if (input_dim < kDenseDim) throw InternalError("input_dim below dense width");
  ScoringModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.activation = activation;
  m.seed = seed;
  Rng rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = rng.next_double(-0.01, 0.01);
  };
  if (hidden_dim > 0) {
    fill(m.w1, hidden_dim * input_dim);
    m.b1.assign(hidden_dim, 0.0);
    fill(m.w2, hidden_dim);
    m.acc_w1.assign(m.w1.size(), 0.0);
    m.acc_b1.assign(hidden_dim, 0.0);
    m.acc_w2.assign(hidden_dim, 0.0);
  } else {
    fill(m.w2, input_dim);
    m.acc_w2.assign(input_dim, 0.0);
  }
  return m;
}

namespace detail {

inline void check_feature(const ScoringModel& m, const FeatureVector& x) {
  for (std::size_t s : x.sparse) {
    if (s >= m.max_sparse()) {
      throw InternalError("sparse index " + std::to_string(s) +
                          " out of range for input_dim " + std::to_string(m.input_dim));
    }
  }
}

// Dot product of a weight row with the (dense, sparse-indicator) input.
inline double input_dot(const double* w, const FeatureVector& x) {
  double z = 0.0;
  for (std::size_t i = 0; i < kDenseDim; ++i) z += w[i] * x.dense[i];
  for (std::size_t s : x.sparse) z += w[kDenseDim + s];
  return z;
}

inline double activate(HiddenActivation a, double z) {
  return a == HiddenActivation::Tanh ? std::tanh(z) : sigmoid(z);
}

inline double activate_grad(HiddenActivation a, double h) {
  // Derivative expressed through the activation value.
  return a == HiddenActivation::Tanh ? 1.0 - h * h : h * (1.0 - h);
}

}  // namespace detail

// Forward pass keeping the hidden activations for backprop.
struct ForwardPass {
  std::vector<double> hidden;  // activations, empty when hidden_dim == 0
  double output = 0.0;         // sigmoid output in (0,1)
};

inline ForwardPass forward(const ScoringModel& m, const FeatureVector& x) {
  detail::check_feature(m, x);
  ForwardPass fp;
  if (m.hidden_dim == 0) {
    fp.output = detail::output_sigmoid(detail::input_dot(m.w2.data(), x) + m.b2);
    return fp;
  }
  fp.hidden.resize(m.hidden_dim);
  double z_out = m.b2;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    double z = detail::input_dot(&m.w1[h * m.input_dim], x) + m.b1[h];
    fp.hidden[h] = detail::activate(m.activation, z);
    z_out += m.w2[h] * fp.hidden[h];
  }
  fp.output = detail::output_sigmoid(z_out);
  return fp;
}

inline double score(const ScoringModel& m, const FeatureVector& x) {
  return forward(m, x).output;
}

struct Gradient {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  static Gradient zeros_like(const ScoringModel& m) {
    Gradient g;
    g.w1.assign(m.w1.size(), 0.0);
    g.b1.assign(m.b1.size(), 0.0);
    g.w2.assign(m.w2.size(), 0.0);
    return g;
  }
};

// Accumulates d(loss)/d(params) = dloss_dscore * d(score)/d(params) into g.
inline void backward(const ScoringModel& m, const FeatureVector& x,
                     const ForwardPass& fp, double dloss_dscore, Gradient& g) {
  if (dloss_dscore == 0.0) return;
  double s = fp.output;
  double d_zout = dloss_dscore * s * (1.0 - s);
  if (m.hidden_dim == 0) {
    for (std::size_t i = 0; i < kDenseDim; ++i) g.w2[i] += d_zout * x.dense[i];
    for (std::size_t sp : x.sparse) g.w2[kDenseDim + sp] += d_zout;
    g.b2 += d_zout;
    return;
  }
  g.b2 += d_zout;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    g.w2[h] += d_zout * fp.hidden[h];
    double d_zh = d_zout * m.w2[h] * detail::activate_grad(m.activation, fp.hidden[h]);
    if (d_zh == 0.0) continue;
    double* gw = &g.w1[h * m.input_dim];
    for (std::size_t i = 0; i < kDenseDim; ++i) gw[i] += d_zh * x.dense[i];
    for (std::size_t sp : x.sparse) gw[kDenseDim + sp] += d_zh;
    g.b1[h] += d_zh;
  }
}

inline Gradient backward(const ScoringModel& m, const FeatureVector& x,
                         double dloss_dscore) {
  Gradient g = Gradient::zeros_like(m);
  backward(m, x, forward(m, x), dloss_dscore, g);
  return g;
}

// accum += grad^2; param -= lr * grad / (sqrt(accum) + 1e-8).
inline void adagrad_step(ScoringModel& m, const Gradient& g, double lr) {
  constexpr double kDelta = 1e-8;
  auto apply = [&](std::vector<double>& p, std::vector<double>& acc,
                   const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (grad[i] == 0.0) continue;
      acc[i] += grad[i] * grad[i];
      p[i] -= lr * grad[i] / (std::sqrt(acc[i]) + kDelta);
    }
  };
  apply(m.w1, m.acc_w1, g.w1);
  apply(m.b1, m.acc_b1, g.b1);
  apply(m.w2, m.acc_w2, g.w2);
  if (g.b2 != 0.0) {
    m.acc_b2 += g.b2 * g.b2;
    m.b2 -= lr * g.b2 / (std::sqrt(m.acc_b2) + kDelta);
  }
}

// --- serialization -------------------------------------------------------
//
// Flat-text container, hex-float parameters for exact round-trips. The
// sparse feature store travels with the model so evaluation sees exactly
// the features the model was trained with.
//
//   faqrank-model v1
//   input_dim N / hidden_dim H / activation tanh|sigmoid / seed S
//   features K, then K store rows (index \t template \t payload)
//   w1/b1/w2/b2 and acc_* blocks, one hex float per line

inline void save_model_stream(const ScoringModel& m, const FeatureStore& store,
                              std::ostream& out) {
  if (store.size() != m.max_sparse()) {
    throw InternalError("feature store size does not match model input_dim");
  }
  out << "faqrank-model v1\n";
  out << "input_dim " << m.input_dim << '\n';
  out << "hidden_dim " << m.hidden_dim << '\n';
  out << "activation " << (m.activation == HiddenActivation::Tanh ? "tanh" : "sigmoid")
      << '\n';
  out << "seed " << m.seed << '\n';
  out << "features " << store.size() << '\n';
  store.save_stream(out);
  auto block = [&](const char* name, const std::vector<double>& v) {
    out << name << ' ' << v.size() << '\n';
    for (double x : v) out << format_hex_double(x) << '\n';
  };
  block("w1", m.w1);
  block("b1", m.b1);
  block("w2", m.w2);
  out << "b2 " << format_hex_double(m.b2) << '\n';
  block("acc_w1", m.acc_w1);
  block("acc_b1", m.acc_b1);
  block("acc_w2", m.acc_w2);
  out << "acc_b2 " << format_hex_double(m.acc_b2) << '\n';
}

struct LoadedModel {
  ScoringModel model;
  FeatureStore store;
};

inline LoadedModel load_model_stream(std::istream& in) {
  auto expect_line = [&](const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("model file: truncated at " + what);
    return line;
  };
  if (expect_line("header") != "faqrank-model v1") {
    throw ParseError("model file: bad header");
  }
  LoadedModel lm;
  auto kv = [&](const std::string& key) {
    std::string line = expect_line(key);
    auto sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key) {
      throw ParseError("model file: expected '" + key + "', got '" + line + "'");
    }
    return line.substr(sp + 1);
  };
  lm.model.input_dim = std::stoull(kv("input_dim"));
  lm.model.hidden_dim = std::stoull(kv("hidden_dim"));
  std::string act = kv("activation");
  if (act == "tanh") lm.model.activation = HiddenActivation::Tanh;
  else if (act == "sigmoid") lm.model.activation = HiddenActivation::Sigmoid;
  else throw ParseError("model file: unknown activation " + act);
  lm.model.seed = std::stoull(kv("seed"));
  std::size_t nfeat = std::stoull(kv("features"));
  for (std::size_t i = 0; i < nfeat; ++i) {
    auto cols = split(expect_line("feature row"), '\t');
    if (cols.size() != 3) throw ParseError("model file: bad feature row");
    lm.store.add({sparse_template_from(cols[1]), cols[2]});
  }
  if (lm.store.size() != lm.model.max_sparse()) {
    throw ParseError("model file: feature count does not match input_dim");
  }
  auto block = [&](const char* name, std::vector<double>& v) {
    std::size_t n = std::stoull(kv(name));
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = parse_hex_double(expect_line(name));
  };
  block("w1", lm.model.w1);
  block("b1", lm.model.b1);
  block("w2", lm.model.w2);
  lm.model.b2 = parse_hex_double(kv("b2"));
  block("acc_w1", lm.model.acc_w1);
  block("acc_b1", lm.model.acc_b1);
  block("acc_w2", lm.model.acc_w2);
  lm.model.acc_b2 = parse_hex_double(kv("acc_b2"));
  return lm;
}

inline void save_model(const ScoringModel& m, const FeatureStore& store,
                       const std::string& path) {
  std::ostringstream ss;
  save_model_stream(m, store, ss);
  write_file(path, ss.str());
}

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  return load_model_stream(in);
}

}  // namespace faqrank
