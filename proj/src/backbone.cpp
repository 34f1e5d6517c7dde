// Copyright 2026 The slap-cpp Authors
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


#include "slap/backbone.hpp"

#include <cmath>

#include "slap/errors.hpp"

namespace slap {

using ad::Tape;
using ad::Var;

void BackboneConfig::validate() const {
  if (latent_count < 1) throw ConfigError("backbone: latent_count must be >= 1");
  if (latent_dim < 1 || heads < 1) throw ConfigError("backbone: latent_dim and heads must be >= 1");
  if (latent_dim % heads != 0) throw ConfigError("backbone: latent_dim must be divisible by heads");
  if (self_attention_blocks < 0) throw ConfigError("backbone: self_attention_blocks must be >= 0");
  if (ff_multiplier < 1) throw ConfigError("backbone: ff_multiplier must be >= 1");
}

Attention::Attention(nn::ParameterStore& store, const std::string& name, int query_dim, int kv_dim, int model_dim,
                     int out_dim, int heads, Rng& rng)
    : q_(store, name + ".query", query_dim, model_dim, rng),
      k_(store, name + ".key", kv_dim, model_dim, rng),
      v_(store, name + ".value", kv_dim, model_dim, rng),
      o_(store, name + ".out", model_dim, out_dim, rng),
      heads_(heads),
      model_dim_(model_dim) {
  if (model_dim % heads != 0) throw ConfigError("attention: model_dim must be divisible by heads");
}

Var Attention::forward(Tape& tape, Var queries, Var keys_values) const {
  const Var q = q_.forward(tape, queries);
  const Var k = k_.forward(tape, keys_values);
  const Var v = v_.forward(tape, keys_values);
  const int dh = model_dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    const Var qh = ad::slice_cols(q, h * dh, dh);
    const Var kh = ad::slice_cols(k, h * dh, dh);
    const Var vh = ad::slice_cols(v, h * dh, dh);
    const Var weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), scale));
    heads.push_back(ad::matmul(weights, vh));
  }
  const Var merged = heads_ == 1 ? heads.front() : ad::concat_cols(heads);
  return o_.forward(tape, merged);
}

FeedForward::FeedForward(nn::ParameterStore& store, const std::string& name, int dim, int multiplier, Rng& rng)
    : norm_(store, name + ".norm", dim),
      up_(store, name + ".up", dim, dim * multiplier, rng),
      down_(store, name + ".down", dim * multiplier, dim, rng) {}

Var FeedForward::forward(Tape& tape, Var x) const {
  return ad::add(x, down_.forward(tape, ad::gelu(up_.forward(tape, norm_.forward(tape, x)))));
}

Backbone::Backbone(nn::ParameterStore& store, const std::string& name, int token_dim, const BackboneConfig& cfg,
                   Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const int ld = cfg_.latent_dim;
  latents_ = &store.create(name + ".latents", cfg_.latent_count, ld);
  nn::init_normal(*latents_, rng, 0.5);
  encode_latent_norm_ = nn::LayerNorm(store, name + ".encode.latent_norm", ld);
  encode_token_norm_ = nn::LayerNorm(store, name + ".encode.token_norm", token_dim);
  encode_ = Attention(store, name + ".encode.attention", ld, token_dim, ld, ld, cfg_.heads, rng);
  encode_ff_ = FeedForward(store, name + ".encode.ff", ld, cfg_.ff_multiplier, rng);
  for (int b = 0; b < cfg_.self_attention_blocks; ++b) {
    const std::string prefix = name + ".block" + std::to_string(b);
    blocks_.push_back({nn::LayerNorm(store, prefix + ".norm", ld),
                       Attention(store, prefix + ".attention", ld, ld, ld, ld, cfg_.heads, rng),
                       FeedForward(store, prefix + ".ff", ld, cfg_.ff_multiplier, rng)});
  }
  decode_latent_norm_ = nn::LayerNorm(store, name + ".decode.latent_norm", ld);
  decode_token_norm_ = nn::LayerNorm(store, name + ".decode.token_norm", token_dim);
  decode_ = Attention(store, name + ".decode.attention", token_dim, ld, ld, token_dim, cfg_.heads, rng);
}

Backbone::Output Backbone::forward(Tape& tape, Var tokens) const {
  if (tokens.rows() < 1) throw InvalidArgument("backbone: empty token sequence");
  Var latents = tape.parameter(*latents_);
  latents = ad::add(latents, encode_.forward(tape, encode_latent_norm_.forward(tape, latents),
                                             encode_token_norm_.forward(tape, tokens)));
  latents = encode_ff_.forward(tape, latents);
  for (const Block& block : blocks_) {
    const Var normed = block.norm.forward(tape, latents);
    latents = ad::add(latents, block.attention.forward(tape, normed, normed));
    latents = block.ff.forward(tape, latents);
  }
  const Var final_latents = decode_latent_norm_.forward(tape, latents);
  const Var out = ad::add(tokens, decode_.forward(tape, decode_token_norm_.forward(tape, tokens), final_latents));
  return {out, ad::mean_rows(final_latents)};
}

ScoreHead::ScoreHead(nn::ParameterStore& store, const std::string& name, int dim, Rng& rng)
    : norm_(store, name + ".norm", dim), linear_(store, name + ".linear", dim, 1, rng) {}

Var ScoreHead::forward(Tape& tape, Var tokens, Eigen::Index count) const {
  if (count < 1 || count > tokens.rows()) throw InvalidArgument("score head: bad spatial token count");
  return linear_.forward(tape, norm_.forward(tape, ad::slice_rows(tokens, 0, count)));
}

}  // namespace slap
