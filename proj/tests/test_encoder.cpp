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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "offlang/classifier.hpp"
#include "offlang/mini_encoder.hpp"
#include "offlang/tokenizer.hpp"
#include "offlang/train.hpp"

using namespace offlang;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.vocab_size = 16;
  c.hidden_size = 4;
  c.num_layers = 1;
  c.num_heads = 1;
  c.feed_forward_size = 4;
  c.max_len = 8;
  c.tokenizer_seed = 9;
  return c;
}

// Independent single-layer forward pass at H=4, heads=1, written from the
// layer equations with plain loops over std::vector<double>. Used as the
// oracle for the library's cached/sliced implementation.
std::vector<double> oracle_forward(const MiniEncoder<double>& enc,
                                   const std::vector<std::uint32_t>& ids) {
  const std::size_t L = ids.size();
  const std::size_t H = 4;
  REQUIRE(enc.config.num_layers == 1);
  REQUIRE(enc.config.num_heads == 1);
  REQUIRE(enc.config.hidden_size == H);
  const auto& layer = enc.layers[0];

  auto mat_vec_rows = [&](const Mat<double>& w, const std::vector<double>& x,
                          const std::vector<double>& b) {
    std::vector<double> y(w.cols, 0.0);
    for (std::size_t j = 0; j < w.cols; ++j) {
      for (std::size_t i = 0; i < w.rows; ++i) y[j] += x[i] * w(i, j);
      if (!b.empty()) y[j] += b[j];
    }
    return y;
  };
  auto layer_norm = [&](const std::vector<double>& x,
                        const std::vector<double>& gamma,
                        const std::vector<double>& beta) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= double(x.size());
    const double rstd = 1.0 / std::sqrt(var + 1e-5);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = gamma[i] * (x[i] - mean) * rstd + beta[i];
    }
    return y;
  };

  // embeddings
  std::vector<std::vector<double>> x(L);
  for (std::size_t i = 0; i < L; ++i) {
    x[i].resize(H);
    for (std::size_t j = 0; j < H; ++j) {
      x[i][j] = enc.token_embedding(ids[i], j) + enc.position_embedding(i, j);
    }
  }

  // single-head attention
  std::vector<std::vector<double>> q(L), k(L), v(L);
  for (std::size_t i = 0; i < L; ++i) {
    q[i] = mat_vec_rows(layer.attn.wq, x[i], layer.attn.bq);
    k[i] = mat_vec_rows(layer.attn.wk, x[i], layer.attn.bk);
    v[i] = mat_vec_rows(layer.attn.wv, x[i], layer.attn.bv);
  }
  std::vector<std::vector<double>> att(L);
  for (std::size_t i = 0; i < L; ++i) {
    att[i].resize(L);
    double mx = -1e300;
    for (std::size_t j = 0; j < L; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < H; ++d) s += q[i][d] * k[j][d];
      att[i][j] = s / std::sqrt(double(H));
      mx = std::max(mx, att[i][j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      att[i][j] = std::exp(att[i][j] - mx);
      sum += att[i][j];
    }
    for (std::size_t j = 0; j < L; ++j) att[i][j] /= sum;
  }
  std::vector<std::vector<double>> x1(L);
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<double> o(H, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t d = 0; d < H; ++d) o[d] += att[i][j] * v[j][d];
    }
    std::vector<double> proj = mat_vec_rows(layer.attn.wo, o, layer.attn.bo);
    for (std::size_t d = 0; d < H; ++d) proj[d] += x[i][d];
    x1[i] = layer_norm(proj, layer.ln1.gamma, layer.ln1.beta);
  }

  // feed-forward on row 0 is all we need, but compute every row anyway
  std::vector<double> out0;
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<double> u = mat_vec_rows(layer.ff.w1, x1[i], layer.ff.b1);
    for (double& val : u) {
      val = 0.5 * val *
            (1.0 + std::tanh(0.7978845608028654 *
                             (val + 0.044715 * val * val * val)));
    }
    std::vector<double> f2 = mat_vec_rows(layer.ff.w2, u, layer.ff.b2);
    for (std::size_t d = 0; d < H; ++d) f2[d] += x1[i][d];
    const std::vector<double> y =
        layer_norm(f2, layer.ln2.gamma, layer.ln2.beta);
    if (i == 0) out0 = y;
  }
  return out0;
}

}  // namespace

TEST_CASE("hash tokenizer") {
  const HashTokenizer tok(64, 7);

  SECTION("empty text is CLS only") {
    const TokenSequence t = tok.tokenize("");
    REQUIRE(t.size() == 1);
    CHECK(t.ids[0] == kClsId);
  }

  SECTION("long input truncates to exactly max_len") {
    std::string text;
    for (int i = 0; i < 1000; ++i) text += "w" + std::to_string(i) + " ";
    const TokenSequence t = tok.tokenize(text, 512);
    CHECK(t.size() == 512);
    CHECK(t.ids[0] == kClsId);
  }

  SECTION("deterministic") {
    CHECK(tok.tokenize("a b c") == tok.tokenize("a b c"));
  }

  SECTION("ids stay inside the hashed range") {
    const TokenSequence t = tok.tokenize("alpha beta gamma delta");
    for (std::size_t i = 1; i < t.size(); ++i) {
      CHECK(t.ids[i] >= kNumReservedIds);
      CHECK(t.ids[i] < 64);
    }
  }

  SECTION("max_len below 2 rejected") {
    CHECK_THROWS_AS(tok.tokenize("x", 1), std::invalid_argument);
  }

  SECTION("identical surface tokens share ids across calls") {
    const TokenSequence a = tok.tokenize("mk1 foo");
    const TokenSequence b = tok.tokenize("bar mk1");
    CHECK(a.ids[1] == b.ids[2]);
  }
}

TEST_CASE("mini encoder initialization") {
  const EncoderConfig cfg = tiny_config();

  SECTION("same seed reproduces parameters; different seeds differ") {
    const auto a = MiniEncoder<float>::init(cfg, 5);
    const auto b = MiniEncoder<float>::init(cfg, 5);
    const auto c = MiniEncoder<float>::init(cfg, 6);
    CHECK(a.token_embedding == b.token_embedding);
    CHECK(a.layers[0].attn.wq == b.layers[0].attn.wq);
    CHECK_FALSE(a.token_embedding == c.token_embedding);
  }

  SECTION("fingerprint is a pure function of the config") {
    EncoderConfig cfg2;
    cfg2.vocab_size = 100;
    cfg2.hidden_size = 16;
    cfg2.num_layers = 2;
    cfg2.num_heads = 2;
    cfg2.feed_forward_size = 32;
    cfg2.max_len = 32;
    const auto enc = MiniEncoder<float>::init(cfg2, 1);
    CHECK(enc.fingerprint() == encoder_fingerprint(cfg2));
    EncoderConfig changed = cfg2;
    changed.hidden_size = 8;
    CHECK(enc.fingerprint() != encoder_fingerprint(changed));
  }

  SECTION("invalid dimensions rejected") {
    EncoderConfig bad = cfg;
    bad.hidden_size = 0;
    CHECK_THROWS_AS(MiniEncoder<float>::init(bad, 1), std::invalid_argument);
    bad = cfg;
    bad.hidden_size = 6;  // not divisible by heads=1? use heads=4
    bad.num_heads = 4;
    CHECK_THROWS_AS(MiniEncoder<float>::init(bad, 1), std::invalid_argument);
  }

  SECTION("layernorm gains start at one, biases at zero") {
    const auto enc = MiniEncoder<float>::init(cfg, 3);
    for (float g : enc.layers[0].ln1.gamma) CHECK(g == 1.0f);
    for (float b : enc.layers[0].attn.bq) CHECK(b == 0.0f);
  }
}

TEST_CASE("encode contract") {
  const EncoderConfig cfg = tiny_config();
  const auto enc = MiniEncoder<float>::init(cfg, 11);

  SECTION("output has length H with finite entries") {
    const std::vector<float> h = enc.encode(enc.tokenize("any input at all"));
    REQUIRE(h.size() == cfg.hidden_size);
    for (float v : h) CHECK(std::isfinite(v));
  }

  SECTION("bitwise deterministic") {
    const TokenSequence t = enc.tokenize("hello bonjour namaste");
    CHECK(enc.encode(t) == enc.encode(t));
  }

  SECTION("out-of-vocabulary id rejected") {
    TokenSequence t;
    t.ids = {kClsId, 99};
    CHECK_THROWS_AS(enc.encode(t), std::invalid_argument);
  }

  SECTION("sequence must start with CLS and be non-empty") {
    TokenSequence t;
    CHECK_THROWS_AS(enc.encode(t), std::invalid_argument);
    t.ids = {5, 6};
    CHECK_THROWS_AS(enc.encode(t), std::invalid_argument);
  }

  SECTION("state/config shape mismatch detected") {
    auto broken = enc;
    broken.layers[0].ff.w1 = Mat<float>(2, 2);
    TokenSequence t;
    t.ids = {kClsId, 4};
    CHECK_THROWS_AS(broken.encode(t), std::invalid_argument);
  }
}

TEST_CASE("forward pass matches the independent H=4 oracle") {
  const EncoderConfig cfg = tiny_config();
  const auto enc = MiniEncoder<double>::init(cfg, 2024);

  const std::vector<std::uint32_t> ids{kClsId, 7, 12};
  TokenSequence toks;
  toks.ids = ids;
  const std::vector<double> h = enc.encode(toks);
  const std::vector<double> expect = oracle_forward(enc, ids);
  REQUIRE(h.size() == expect.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK_THAT(h[i], Catch::Matchers::WithinAbs(expect[i], 1e-12));
  }

  SECTION("permuting non-CLS tokens changes the representation") {
    TokenSequence swapped;
    swapped.ids = {kClsId, 12, 7};
    const std::vector<double> h2 = enc.encode(swapped);
    const std::vector<double> expect2 = oracle_forward(enc, swapped.ids);
    for (std::size_t i = 0; i < h2.size(); ++i) {
      CHECK_THAT(h2[i], Catch::Matchers::WithinAbs(expect2[i], 1e-12));
    }
    bool differs = false;
    for (std::size_t i = 0; i < h.size(); ++i) {
      differs = differs || h[i] != h2[i];
    }
    CHECK(differs);  // position information present
  }
}

TEST_CASE("multi-head slicing agrees across head counts only by content") {
  // Not an equivalence claim; just pins that 2-head configs run and give
  // finite, deterministic output through the sliced path.
  EncoderConfig cfg = tiny_config();
  cfg.hidden_size = 8;
  cfg.num_heads = 2;
  cfg.feed_forward_size = 16;
  const auto enc = MiniEncoder<float>::init(cfg, 77);
  const auto h = enc.encode(enc.tokenize("a b c d e"));
  REQUIRE(h.size() == 8);
  CHECK(enc.encode(enc.tokenize("a b c d e")) == h);
}

namespace {

// Minimal pretrained-adapter stand-in: a bag-of-token-ids embedding.
// Proves the drop-in contract for everything downstream of encode.
struct BagAdapter {
  std::size_t hidden = 4;
  std::size_t hidden_size() const { return hidden; }
  TokenSequence tokenize(std::string_view text) const {
    return HashTokenizer(32, 1).tokenize(text, 16);
  }
  std::vector<float> encode(const TokenSequence& toks) const {
    std::vector<float> h(hidden, 0.0f);
    for (std::uint32_t id : toks.ids) h[id % hidden] += 0.25f;
    return h;
  }
};

static_assert(sequence_encoder<BagAdapter, float>);
static_assert(sequence_encoder<MiniEncoder<float>, float>);
static_assert(sequence_encoder<MiniEncoder<double>, double>);

}  // namespace

TEST_CASE("adapters drop in behind the encoder contract") {
  ClassifierModel<float, BagAdapter> model;
  model.scheme = {"pair", {"yes", "no"}};
  model.head = HeadState<float>::init(2, 4, 3);
  const std::vector<double> p = predict_proba(model, "one two three");
  REQUIRE(p.size() == 2);
  CHECK_THAT(p[0] + p[1], Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK(predict(model, "one two three") == argmax_tie_low(p));

  SECTION("evaluation runs over adapter-backed models unchanged") {
    Dataset d;
    d.scheme = model.scheme;
    d.language = "xx";
    d.source = "synthetic";
    d.instances = {{"a", "one two", 0}, {"b", "three four five", 1},
                   {"c", "six", 0}};
    const double f1 = dataset_macro_f1(model, d);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
  }
}
