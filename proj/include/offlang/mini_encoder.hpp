// Copyright 2026 The offlang Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Deterministic miniature self-attention encoder. Shares the exact
// contract of a full pretrained cross-lingual encoder (CLS-pooled hidden
// state over a token sequence) at a size where finite-difference gradient
// checks and desk-scale transfer experiments are cheap.
//
// Per layer (post-norm):
//   attn = Wo * MultiHead(XWq, XWk, XWv) + bo
//   x    = LayerNorm(x + attn)
//   x    = LayerNorm(x + W2 * gelu(W1 x + b1) + b2)
// The CLS representation is row 0 of the final layer output.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "offlang/encoder.hpp"
#include "offlang/rng.hpp"
#include "offlang/tensor.hpp"
#include "offlang/tokenizer.hpp"

namespace offlang {

namespace detail {

template <class T>
T gelu(T x) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T a = static_cast<T>(0.044715);
  return static_cast<T>(0.5) * x *
         (static_cast<T>(1) + std::tanh(c * (x + a * x * x * x)));
}

template <class T>
T gelu_grad(T x) {
  const T c = static_cast<T>(0.7978845608028654);
  const T a = static_cast<T>(0.044715);
  const T t = std::tanh(c * (x + a * x * x * x));
  const T sech2 = static_cast<T>(1) - t * t;
  return static_cast<T>(0.5) * (static_cast<T>(1) + t) +
         static_cast<T>(0.5) * x * sech2 * c *
             (static_cast<T>(1) + static_cast<T>(3) * a * x * x);
}

template <class T>
void softmax_rows(Mat<T>& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    T* r = m.row(i);
    T mx = r[0];
    for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
    T sum{};
    for (std::size_t j = 0; j < m.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    for (std::size_t j = 0; j < m.cols; ++j) r[j] /= sum;
  }
}

// d_scores from d_probs for a row-wise softmax, using the saved probs.
template <class T>
Mat<T> softmax_backward_rows(const Mat<T>& probs, const Mat<T>& d_probs) {
  Mat<T> d_scores(probs.rows, probs.cols);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const T* p = probs.row(i);
    const T* dp = d_probs.row(i);
    T dot{};
    for (std::size_t j = 0; j < probs.cols; ++j) dot += p[j] * dp[j];
    T* ds = d_scores.row(i);
    for (std::size_t j = 0; j < probs.cols; ++j) ds[j] = p[j] * (dp[j] - dot);
  }
  return d_scores;
}

template <class T>
Mat<T> col_slice(const Mat<T>& m, std::size_t c0, std::size_t width) {
  Mat<T> out(m.rows, width);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const T* src = m.row(i) + c0;
    T* dst = out.row(i);
    for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
  }
  return out;
}

template <class T>
void col_slice_write(Mat<T>& m, std::size_t c0, const Mat<T>& block) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    T* dst = m.row(i) + c0;
    const T* src = block.row(i);
    for (std::size_t j = 0; j < block.cols; ++j) dst[j] = src[j];
  }
}

}  // namespace detail

template <class T = float>
class MiniEncoder {
 public:
  static constexpr T kLayerNormEps = static_cast<T>(1e-5);

  struct Attention {
    Mat<T> wq, wk, wv, wo;  // each H x H
    std::vector<T> bq, bk, bv, bo;
  };
  struct FeedForward {
    Mat<T> w1;  // H x F
    std::vector<T> b1;
    Mat<T> w2;  // F x H
    std::vector<T> b2;
  };
  struct LayerNormParams {
    std::vector<T> gamma, beta;
  };
  struct Layer {
    Attention attn;
    LayerNormParams ln1;
    FeedForward ff;
    LayerNormParams ln2;
  };

  EncoderConfig config;
  Mat<T> token_embedding;     // vocab x H
  Mat<T> position_embedding;  // max_len x H
  std::vector<Layer> layers;

  MiniEncoder() = default;

  // Allocates the architecture with all parameters zero.
  explicit MiniEncoder(const EncoderConfig& cfg) : config(cfg) {
    cfg.validate();
    const std::size_t H = cfg.hidden_size;
    const std::size_t F = cfg.feed_forward_size;
    token_embedding = Mat<T>(cfg.vocab_size, H);
    position_embedding = Mat<T>(cfg.max_len, H);
    layers.resize(cfg.num_layers);
    for (Layer& l : layers) {
      l.attn.wq = Mat<T>(H, H);
      l.attn.wk = Mat<T>(H, H);
      l.attn.wv = Mat<T>(H, H);
      l.attn.wo = Mat<T>(H, H);
      l.attn.bq.assign(H, T{});
      l.attn.bk.assign(H, T{});
      l.attn.bv.assign(H, T{});
      l.attn.bo.assign(H, T{});
      l.ln1.gamma.assign(H, T{});
      l.ln1.beta.assign(H, T{});
      l.ff.w1 = Mat<T>(H, F);
      l.ff.b1.assign(F, T{});
      l.ff.w2 = Mat<T>(F, H);
      l.ff.b2.assign(H, T{});
      l.ln2.gamma.assign(H, T{});
      l.ln2.beta.assign(H, T{});
    }
  }

  // Seeded deterministic initialization: weights ~ N(0, 0.02), biases and
  // layernorm shifts zero, layernorm gains one.
  static MiniEncoder init(const EncoderConfig& cfg, std::uint64_t seed) {
    MiniEncoder enc(cfg);
    Rng rng(mix_seed(seed, 0x0FF1A9Eull));
    enc.for_each_param([&](const std::string& name,
                           const std::vector<std::size_t>&,
                           std::vector<T>& data) {
      if (name.ends_with(".gamma")) {
        for (T& v : data) v = static_cast<T>(1);
      } else if (name.starts_with("embed.") || name.find(".w") !=
                                                   std::string::npos) {
        for (T& v : data) v = static_cast<T>(rng.normal(0.0, 0.02));
      }  // biases and .beta stay zero
    });
    return enc;
  }

  static MiniEncoder zeros_like(const MiniEncoder& other) {
    return MiniEncoder(other.config);
  }

  std::size_t hidden_size() const { return config.hidden_size; }

  std::string fingerprint() const { return encoder_fingerprint(config); }

  TokenSequence tokenize(std::string_view text) const {
    return HashTokenizer(config.vocab_size, config.tokenizer_seed)
        .tokenize(text, config.max_len);
  }

  // Canonical parameter traversal; defines init draw order, optimizer
  // slot order and checkpoint tensor order.
  template <class F>
  void for_each_param(F&& fn) {
    visit(*this, std::forward<F>(fn));
  }
  template <class F>
  void for_each_param(F&& fn) const {
    visit(*this, std::forward<F>(fn));
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for_each_param([&](const std::string&, const std::vector<std::size_t>&,
                       const std::vector<T>& data) { n += data.size(); });
    return n;
  }

  void validate_shapes() const {
    config.validate();
    const std::size_t H = config.hidden_size;
    const std::size_t F = config.feed_forward_size;
    auto expect = [](bool ok, const char* what) {
      if (!ok) {
        throw std::invalid_argument(std::string("encoder state: ") + what +
                                    " does not match config");
      }
    };
    expect(token_embedding.rows == config.vocab_size &&
               token_embedding.cols == H,
           "token embedding shape");
    expect(position_embedding.rows == config.max_len &&
               position_embedding.cols == H,
           "position embedding shape");
    expect(layers.size() == config.num_layers, "layer count");
    for (const Layer& l : layers) {
      expect(l.attn.wq.rows == H && l.attn.wq.cols == H &&
                 l.attn.wk.rows == H && l.attn.wk.cols == H &&
                 l.attn.wv.rows == H && l.attn.wv.cols == H &&
                 l.attn.wo.rows == H && l.attn.wo.cols == H,
             "attention weight shape");
      expect(l.attn.bq.size() == H && l.attn.bk.size() == H &&
                 l.attn.bv.size() == H && l.attn.bo.size() == H,
             "attention bias shape");
      expect(l.ln1.gamma.size() == H && l.ln1.beta.size() == H &&
                 l.ln2.gamma.size() == H && l.ln2.beta.size() == H,
             "layernorm shape");
      expect(l.ff.w1.rows == H && l.ff.w1.cols == F && l.ff.b1.size() == F &&
                 l.ff.w2.rows == F && l.ff.w2.cols == H &&
                 l.ff.b2.size() == H,
             "feed-forward shape");
    }
  }

  struct LayerCache {
    Mat<T> x_in;              // L x H
    Mat<T> q, k, v;           // L x H
    std::vector<Mat<T>> att;  // per head, L x L softmax probs
    Mat<T> att_concat;        // L x H, pre-output-projection
    Mat<T> x1_hat;            // LN1 normalized input
    std::vector<T> ln1_rstd;  // per row
    Mat<T> x1;                // LN1 output
    Mat<T> u;                 // L x F pre-activation
    Mat<T> g;                 // L x F gelu(u)
    Mat<T> x2_hat;
    std::vector<T> ln2_rstd;
  };
  struct ForwardCache {
    TokenSequence tokens;
    std::vector<LayerCache> layers;
    Mat<T> output;  // L x H final hidden states
  };

  // CLS hidden state (final-layer row 0). Deterministic given (state,
  // tokens): single-threaded with a fixed operation order.
  std::vector<T> encode(const TokenSequence& tokens) const {
    ForwardCache cache;
    return forward(tokens, cache);
  }

  std::vector<T> forward(const TokenSequence& tokens,
                         ForwardCache& cache) const {
    validate_tokens(tokens);
    const std::size_t L = tokens.size();
    const std::size_t H = config.hidden_size;
    const std::size_t heads = config.num_heads;
    const std::size_t dh = H / heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    cache.tokens = tokens;
    cache.layers.assign(config.num_layers, LayerCache{});

    Mat<T> x(L, H);
    for (std::size_t i = 0; i < L; ++i) {
      const T* tok = token_embedding.row(tokens.ids[i]);
      const T* pos = position_embedding.row(i);
      T* dst = x.row(i);
      for (std::size_t j = 0; j < H; ++j) dst[j] = tok[j] + pos[j];
    }

    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& p = layers[li];
      LayerCache& c = cache.layers[li];
      c.x_in = x;

      c.q = matmul(x, p.attn.wq);
      add_row_bias(c.q, p.attn.bq);
      c.k = matmul(x, p.attn.wk);
      add_row_bias(c.k, p.attn.bk);
      c.v = matmul(x, p.attn.wv);
      add_row_bias(c.v, p.attn.bv);

      c.att.resize(heads);
      c.att_concat = Mat<T>(L, H);
      for (std::size_t h = 0; h < heads; ++h) {
        const Mat<T> qh = detail::col_slice(c.q, h * dh, dh);
        const Mat<T> kh = detail::col_slice(c.k, h * dh, dh);
        const Mat<T> vh = detail::col_slice(c.v, h * dh, dh);
        Mat<T> scores = matmul_nt(qh, kh);
        for (T& s : scores.a) s *= scale;
        detail::softmax_rows(scores);
        c.att[h] = std::move(scores);
        const Mat<T> oh = matmul(c.att[h], vh);
        detail::col_slice_write(c.att_concat, h * dh, oh);
      }

      Mat<T> proj = matmul(c.att_concat, p.attn.wo);
      add_row_bias(proj, p.attn.bo);
      add_inplace(proj, x);  // residual: r1 = x + attn(x)
      layernorm_rows(proj, p.ln1, c.x1_hat, c.ln1_rstd, c.x1);

      c.u = matmul(c.x1, p.ff.w1);
      add_row_bias(c.u, p.ff.b1);
      c.g = c.u;
      for (T& v : c.g.a) v = detail::gelu(v);
      Mat<T> f2 = matmul(c.g, p.ff.w2);
      add_row_bias(f2, p.ff.b2);
      add_inplace(f2, c.x1);  // residual: r2 = x1 + ff(x1)
      Mat<T> out;
      layernorm_rows(f2, p.ln2, c.x2_hat, c.ln2_rstd, out);
      x = std::move(out);
    }

    cache.output = x;
    std::vector<T> cls(x.row(0), x.row(0) + H);
    if (!all_finite(cls)) {
      throw std::runtime_error("encode: non-finite CLS representation");
    }
    return cls;
  }

  // Accumulates d(loss)/d(params) into `grad` (an architecture twin,
  // typically zeros_like) given the upstream gradient at the CLS output.
  void backward(const ForwardCache& cache, const std::vector<T>& d_cls,
                MiniEncoder& grad) const {
    const std::size_t L = cache.tokens.size();
    const std::size_t H = config.hidden_size;
    const std::size_t heads = config.num_heads;
    const std::size_t dh = H / heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    if (d_cls.size() != H) {
      throw std::invalid_argument("backward: gradient length mismatch");
    }

    Mat<T> dx(L, H);  // gradient wrt current layer output
    for (std::size_t j = 0; j < H; ++j) dx(0, j) = d_cls[j];

    for (std::size_t li = layers.size(); li-- > 0;) {
      const Layer& p = layers[li];
      const LayerCache& c = cache.layers[li];
      Layer& g = grad.layers[li];

      // LN2
      const Mat<T> d_r2 =
          layernorm_backward(dx, c.x2_hat, c.ln2_rstd, p.ln2, g.ln2);

      // feed-forward; residual adds d_r2 into d_x1 directly
      matmul_tn_acc(c.g, d_r2, g.ff.w2);
      colsum_acc(d_r2, g.ff.b2);
      Mat<T> d_g = matmul_nt(d_r2, p.ff.w2);
      Mat<T> d_u = std::move(d_g);
      for (std::size_t i = 0; i < d_u.a.size(); ++i) {
        d_u.a[i] *= detail::gelu_grad(c.u.a[i]);
      }
      matmul_tn_acc(c.x1, d_u, g.ff.w1);
      colsum_acc(d_u, g.ff.b1);
      Mat<T> d_x1 = matmul_nt(d_u, p.ff.w1);
      add_inplace(d_x1, d_r2);

      // LN1
      const Mat<T> d_r1 =
          layernorm_backward(d_x1, c.x1_hat, c.ln1_rstd, p.ln1, g.ln1);

      // attention output projection; d_r1 is also the residual path into x
      matmul_tn_acc(c.att_concat, d_r1, g.attn.wo);
      colsum_acc(d_r1, g.attn.bo);
      const Mat<T> d_concat = matmul_nt(d_r1, p.attn.wo);

      Mat<T> d_q(L, H), d_k(L, H), d_v(L, H);
      for (std::size_t h = 0; h < heads; ++h) {
        const Mat<T> qh = detail::col_slice(c.q, h * dh, dh);
        const Mat<T> kh = detail::col_slice(c.k, h * dh, dh);
        const Mat<T> vh = detail::col_slice(c.v, h * dh, dh);
        const Mat<T> d_oh = detail::col_slice(d_concat, h * dh, dh);

        const Mat<T> d_att = matmul_nt(d_oh, vh);
        const Mat<T> d_vh = matmul_tn(c.att[h], d_oh);
        Mat<T> d_scores = detail::softmax_backward_rows(c.att[h], d_att);
        for (T& s : d_scores.a) s *= scale;
        const Mat<T> d_qh = matmul(d_scores, kh);
        const Mat<T> d_kh = matmul_tn(d_scores, qh);

        detail::col_slice_write(d_q, h * dh, d_qh);
        detail::col_slice_write(d_k, h * dh, d_kh);
        detail::col_slice_write(d_v, h * dh, d_vh);
      }

      matmul_tn_acc(c.x_in, d_q, g.attn.wq);
      colsum_acc(d_q, g.attn.bq);
      matmul_tn_acc(c.x_in, d_k, g.attn.wk);
      colsum_acc(d_k, g.attn.bk);
      matmul_tn_acc(c.x_in, d_v, g.attn.wv);
      colsum_acc(d_v, g.attn.bv);

      Mat<T> d_xin = matmul_nt(d_q, p.attn.wq);
      add_inplace(d_xin, matmul_nt(d_k, p.attn.wk));
      add_inplace(d_xin, matmul_nt(d_v, p.attn.wv));
      add_inplace(d_xin, d_r1);  // residual
      dx = std::move(d_xin);
    }

    for (std::size_t i = 0; i < L; ++i) {
      const T* src = dx.row(i);
      T* tok = grad.token_embedding.row(cache.tokens.ids[i]);
      T* pos = grad.position_embedding.row(i);
      for (std::size_t j = 0; j < H; ++j) {
        tok[j] += src[j];
        pos[j] += src[j];
      }
    }
  }

 private:
  void validate_tokens(const TokenSequence& tokens) const {
    validate_shapes();
    if (tokens.ids.empty()) {
      throw std::invalid_argument("encode: empty token sequence");
    }
    if (tokens.ids[0] != kClsId) {
      throw std::invalid_argument("encode: sequence must start with CLS");
    }
    if (tokens.size() > config.max_len) {
      throw std::invalid_argument("encode: sequence exceeds max_len");
    }
    for (std::uint32_t id : tokens.ids) {
      if (id >= config.vocab_size) {
        throw std::invalid_argument("encode: out-of-vocabulary token id " +
                                    std::to_string(id));
      }
    }
  }

  static void layernorm_rows(const Mat<T>& input, const LayerNormParams& p,
                             Mat<T>& x_hat, std::vector<T>& rstd,
                             Mat<T>& out) {
    const std::size_t H = input.cols;
    x_hat = Mat<T>(input.rows, H);
    out = Mat<T>(input.rows, H);
    rstd.assign(input.rows, T{});
    for (std::size_t i = 0; i < input.rows; ++i) {
      const T* r = input.row(i);
      T mean{};
      for (std::size_t j = 0; j < H; ++j) mean += r[j];
      mean /= static_cast<T>(H);
      T var{};
      for (std::size_t j = 0; j < H; ++j) {
        const T d = r[j] - mean;
        var += d * d;
      }
      var /= static_cast<T>(H);
      const T rs = static_cast<T>(1) / std::sqrt(var + kLayerNormEps);
      rstd[i] = rs;
      T* xh = x_hat.row(i);
      T* o = out.row(i);
      for (std::size_t j = 0; j < H; ++j) {
        xh[j] = (r[j] - mean) * rs;
        o[j] = p.gamma[j] * xh[j] + p.beta[j];
      }
    }
  }

  static Mat<T> layernorm_backward(const Mat<T>& d_out, const Mat<T>& x_hat,
                                   const std::vector<T>& rstd,
                                   const LayerNormParams& p,
                                   LayerNormParams& grad) {
    const std::size_t H = d_out.cols;
    Mat<T> d_in(d_out.rows, H);
    for (std::size_t i = 0; i < d_out.rows; ++i) {
      const T* dy = d_out.row(i);
      const T* xh = x_hat.row(i);
      T m1{}, m2{};
      for (std::size_t j = 0; j < H; ++j) {
        grad.beta[j] += dy[j];
        grad.gamma[j] += dy[j] * xh[j];
        const T dxh = dy[j] * p.gamma[j];
        m1 += dxh;
        m2 += dxh * xh[j];
      }
      m1 /= static_cast<T>(H);
      m2 /= static_cast<T>(H);
      T* di = d_in.row(i);
      for (std::size_t j = 0; j < H; ++j) {
        const T dxh = dy[j] * p.gamma[j];
        di[j] = rstd[i] * (dxh - m1 - xh[j] * m2);
      }
    }
    return d_in;
  }

  template <class Self, class F>
  static void visit(Self& self, F&& fn) {
    using Dims = std::vector<std::size_t>;
    fn("embed.token", Dims{self.token_embedding.rows, self.token_embedding.cols},
       self.token_embedding.a);
    fn("embed.position",
       Dims{self.position_embedding.rows, self.position_embedding.cols},
       self.position_embedding.a);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      const std::string prefix = "layer" + std::to_string(l) + ".";
      auto matp = [&](const char* name, auto& m) {
        fn(prefix + name, Dims{m.rows, m.cols}, m.a);
      };
      auto vecp = [&](const char* name, auto& v) {
        fn(prefix + name, Dims{v.size()}, v);
      };
      matp("attn.wq", layer.attn.wq);
      vecp("attn.bq", layer.attn.bq);
      matp("attn.wk", layer.attn.wk);
      vecp("attn.bk", layer.attn.bk);
      matp("attn.wv", layer.attn.wv);
      vecp("attn.bv", layer.attn.bv);
      matp("attn.wo", layer.attn.wo);
      vecp("attn.bo", layer.attn.bo);
      vecp("ln1.gamma", layer.ln1.gamma);
      vecp("ln1.beta", layer.ln1.beta);
      matp("ff.w1", layer.ff.w1);
      vecp("ff.b1", layer.ff.b1);
      matp("ff.w2", layer.ff.w2);
      vecp("ff.b2", layer.ff.b2);
      vecp("ln2.gamma", layer.ln2.gamma);
      vecp("ln2.beta", layer.ln2.beta);
    }
  }
};

}  // namespace offlang
