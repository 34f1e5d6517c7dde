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


// Fixed-size latent attention backbone: a learned latent array reads the
// token sequence through cross-attention, refines itself with
// self-attention, and is read back by the tokens acting as queries.

#pragma once

#include <string>
#include <vector>

#include "slap/nn.hpp"

namespace slap {

struct BackboneConfig {
  int latent_count = 64;
  int latent_dim = 128;
  int self_attention_blocks = 4;
  int heads = 4;
  int ff_multiplier = 4;

  void validate() const;
};

/// Multi-head attention with separate query and key/value input widths.
class Attention {
 public:
  Attention() = default;
  Attention(nn::ParameterStore& store, const std::string& name, int query_dim, int kv_dim, int model_dim,
            int out_dim, int heads, Rng& rng);

  /// Inputs are expected to be normalized already.
  ad::Var forward(ad::Tape& tape, ad::Var queries, ad::Var keys_values) const;

 private:
  nn::Linear q_, k_, v_, o_;
  int heads_ = 1;
  int model_dim_ = 0;
};

/// Pre-norm residual feed-forward block.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(nn::ParameterStore& store, const std::string& name, int dim, int multiplier, Rng& rng);
  /// Returns x + MLP(LN(x)).
  ad::Var forward(ad::Tape& tape, ad::Var x) const;

 private:
  nn::LayerNorm norm_;
  nn::Linear up_, down_;
};

class Backbone {
 public:
  struct Output {
    ad::Var tokens;  // one row per input token, token width
    ad::Var pooled;  // 1 x latent_dim mean of the final latents
  };

  Backbone() = default;
  Backbone(nn::ParameterStore& store, const std::string& name, int token_dim, const BackboneConfig& cfg, Rng& rng);

  Output forward(ad::Tape& tape, ad::Var tokens) const;
  const BackboneConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::LayerNorm norm;
    Attention attention;
    FeedForward ff;
  };

  BackboneConfig cfg_;
  ad::Parameter* latents_ = nullptr;
  nn::LayerNorm encode_latent_norm_, encode_token_norm_;
  Attention encode_;
  FeedForward encode_ff_;
  std::vector<Block> blocks_;
  nn::LayerNorm decode_latent_norm_, decode_token_norm_;
  Attention decode_;
};

/// Linear map from each token row to one score.
class ScoreHead {
 public:
  ScoreHead() = default;
  ScoreHead(nn::ParameterStore& store, const std::string& name, int dim, Rng& rng);
  /// Scores of rows [0, count) only.
  ad::Var forward(ad::Tape& tape, ad::Var tokens, Eigen::Index count) const;

 private:
  nn::LayerNorm norm_;
  nn::Linear linear_;
};

}  // namespace slap
