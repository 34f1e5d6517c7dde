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


#include "slap/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slap/cloud_io.hpp"
#include "slap/errors.hpp"

namespace slap {

using ad::Matrix;
using ad::Tape;
using ad::Var;

InteractionPrediction make_prediction(std::vector<double> scores, std::vector<Vec3> points) {
  if (scores.empty() || scores.size() != points.size()) {
    throw InvalidArgument("make_prediction: need one score per token");
  }
  InteractionPrediction pred;
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  const std::size_t keep = (scores.size() * 5 + 99) / 100;
  pred.top_mask.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  pred.index = order.front();
  pred.point = points[pred.index];
  pred.scores = std::move(scores);
  pred.points = std::move(points);
  return pred;
}

int snap_to_tokens(std::span<const Vec3> points, const Vec3& target, double max_distance) {
  if (points.empty()) throw TargetNotInP("interaction point has no token to snap to");
  const std::size_t i = nearest_index(points, target);
  if ((points[i] - target).norm() > max_distance) {
    throw TargetNotInP("interaction point is " + std::to_string((points[i] - target).norm()) +
                       " m from the nearest token");
  }
  return static_cast<int>(i);
}

namespace {

Eigen::VectorXd softmax(std::span<const double> f) {
  const double m = *std::max_element(f.begin(), f.end());
  Eigen::VectorXd s(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) s[static_cast<Eigen::Index>(k)] = std::exp(f[k] - m);
  return s / s.sum();
}

}  // namespace

double locality_loss(std::span<const double> scores, std::span<const Vec3> points, const Vec3& target) {
  if (scores.empty() || scores.size() != points.size()) throw InvalidArgument("locality_loss: size mismatch");
  const Eigen::VectorXd s = softmax(scores);
  double loss = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) loss += s[static_cast<Eigen::Index>(k)] * (points[k] - target).squaredNorm();
  return loss;
}

IpmLossParts ipm_loss(std::span<const double> scores, std::span<const Vec3> points, const Vec3& target,
                      double weight) {
  if (scores.empty() || scores.size() != points.size()) throw InvalidArgument("ipm_loss: size mismatch");
  if (!(weight >= 0)) throw InvalidArgument("ipm_loss: weight must be >= 0");
  const int t = snap_to_tokens(points, target);
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double f : scores) z += std::exp(f - m);
  IpmLossParts parts;
  parts.cross_entropy = m + std::log(z) - scores[t];
  parts.locality = locality_loss(scores, points, points[t]);
  parts.total = parts.cross_entropy + weight / static_cast<double>(points.size()) * parts.locality;
  return parts;
}

Var ipm_loss(Var scores, std::span<const Vec3> points, int target_index, double weight, IpmLossParts* parts) {
  const Matrix& f = scores.value();
  const auto n = static_cast<Eigen::Index>(points.size());
  if (f.cols() != 1 || f.rows() != n || n == 0) throw InvalidArgument("ipm_loss: scores must be |P| x 1");
  if (target_index < 0 || target_index >= n) throw TargetNotInP("ipm_loss: target index outside P");
  if (!(weight >= 0)) throw InvalidArgument("ipm_loss: weight must be >= 0");
  const double m = f.maxCoeff();
  Eigen::VectorXd s = (f.col(0).array() - m).exp();
  const double z = s.sum();
  s /= z;
  Eigen::VectorXd d2(n);
  for (Eigen::Index k = 0; k < n; ++k) d2[k] = (points[k] - points[target_index]).squaredNorm();
  const double ce = m + std::log(z) - f(target_index, 0);
  const double loc = s.dot(d2);
  const double c = weight / static_cast<double>(n);
  const double total = ce + c * loc;
  if (parts) *parts = {ce, loc, total};
  Eigen::VectorXd grad = s;
  grad[target_index] -= 1.0;
  grad.array() += c * s.array() * (d2.array() - loc);
  Matrix value(1, 1);
  value(0, 0) = total;
  const int id = scores.id();
  return scores.tape()->push(std::move(value), {scores}, [id, grad = std::move(grad)](Tape& t, int self) {
    t.accumulate(id, t.grad(self)(0, 0) * grad);
  });
}

void IpmConfig::validate() const {
  encoder.validate();
  backbone.validate();
}

IpmModel::IpmModel(const IpmConfig& cfg, Vocabulary vocab, std::uint64_t seed) : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  Rng rng(seed);
  const int d = cfg_.encoder.dim;
  encoder_ = TwoScaleEncoder(store_, "ipm.encoder", cfg_.encoder, rng);
  position_ = nn::Linear(store_, "ipm.position", 6 * cfg_.encoder.position_bands, d, rng);
  words_ = WordEmbedding(store_, "ipm.words", vocab_.table_size(), d, rng);
  std::vector<int> widths = cfg_.proprio_hidden;
  widths.push_back(d);
  proprio_ = nn::Mlp(store_, "ipm.proprio", 3, widths, false, rng);
  segments_ = &store_.create("ipm.segments", 3, d);
  nn::init_normal(*segments_, rng, 0.1);
  backbone_ = Backbone(store_, "ipm.backbone", d, cfg_.backbone, rng);
  head_ = ScoreHead(store_, "ipm.score", d, rng);
}

IpmModel::Output IpmModel::forward(Tape& tape, const PointCloud& cloud, const std::string& command,
                                   const ProprioState& state) const {
  SpatialTokens spatial = encoder_.forward(tape, cloud);
  const Var segments = tape.parameter(*segments_);
  const Matrix pos = spatial_position_features(spatial.points, cfg_.encoder.position_bands, cfg_.encoder.max_period,
                                               cfg_.encoder.min_period);
  Var space = ad::add(spatial.features, position_.forward(tape, tape.constant(pos)));
  space = ad::add_row(space, ad::slice_rows(segments, 0, 1));

  const std::vector<int> ids = vocab_.encode(command);
  const Var language = ad::add_row(words_.forward(tape, ids), ad::slice_rows(segments, 1, 1));

  const Eigen::Vector3d feat = state.features();
  Matrix prop(1, 3);
  prop << feat[0], feat[1], feat[2];
  const Var proprio = ad::add(proprio_.forward(tape, tape.constant(prop)), ad::slice_rows(segments, 2, 1));

  const Var parts[] = {space, language, proprio};
  const Backbone::Output out = backbone_.forward(tape, ad::concat_rows(parts));
  const auto n = static_cast<Eigen::Index>(spatial.points.size());
  return {std::move(spatial.points), head_.forward(tape, out.tokens, n), static_cast<int>(ids.size())};
}

InteractionPrediction IpmModel::predict(const PointCloud& cloud, const std::string& command,
                                        const ProprioState& state) const {
  Tape tape(false);
  Output out = forward(tape, cloud, command, state);
  const Matrix& f = out.scores.value();
  std::vector<double> scores(f.data(), f.data() + f.rows());
  return make_prediction(std::move(scores), std::move(out.points));
}

InteractionPrediction IpmModel::predict(const Demonstration& demo) const {
  return predict(demo.cloud, demo.command, demo.initial_state);
}

Matrix IpmModel::embed_language(const std::string& command) const {
  Tape tape(false);
  const std::vector<int> ids = vocab_.encode(command);
  return words_.forward(tape, ids).value();
}

void export_attention(const InteractionPrediction& pred, const PointCloud& tokens, const std::filesystem::path& path) {
  if (tokens.size() != pred.points.size()) throw InvalidArgument("export_attention: token cloud size mismatch");
  PointCloud out = tokens;
  out.source_view.clear();
  std::vector<std::uint8_t> labels(tokens.size(), 0);
  for (int i : pred.top_mask) {
    out.colors[i] = Vec3(1, 0, 0);
    labels[i] = 1;
  }
  // Marker: points on a 1 cm sphere around the argmax.
  const double r = 0.01;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double phi = a * 0.7853981633974483, theta = (b + 0.5) * 0.7853981633974483;
      const Vec3 offset(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      out.positions.push_back(pred.point + r * offset);
      out.colors.push_back(Vec3(1, 1, 0));
      labels.push_back(2);
    }
  }
  save_ply(path, out, labels);
}

}  // namespace slap
