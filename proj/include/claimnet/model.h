// Copyright 2026 The claimnet Authors.
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

#ifndef CLAIMNET_MODEL_H_
#define CLAIMNET_MODEL_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "claimnet/diffkit.h"
#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/rng.h"

namespace claimnet::model {

// Architectures compared in the ablation study.
enum class Variant {
  kDeepClaim1,     // L=2, per-task towers
  kDeepClaim2,     // L=2, no towers
  kNoMultipliers,  // L=0, no towers, additive fusion
  kNoGates,        // L=0, no towers, additive fusion, no gates
  kBaselineNN,     // one hidden layer over the concatenated input
};

inline constexpr std::array<Variant, 5> kAllVariants = {
    Variant::kDeepClaim1, Variant::kDeepClaim2, Variant::kNoMultipliers,
    Variant::kNoGates, Variant::kBaselineNN};

const char* VariantName(Variant v);  // deepclaim1, deepclaim2, ...
Variant ParseVariant(const std::string& name);

// Loss weights on the claim-code, service-code and response-day terms.
struct LossWeights {
  double claim_codes = 1.0;
  double service_codes = 1.0;
  double response_days = 0.01;
};

struct ModelConfig {
  // Input segment sizes (vocabulary sizes per category).
  std::size_t procedure_dim = 0;
  std::size_t diagnosis_dim = 0;
  std::size_t other_dim = 0;

  std::size_t context_dim = 96;
  std::size_t embed_dim = 94;
  int shared_layers = 2;
  bool towers = false;
  bool gates_enabled = true;
  bool multipliers_enabled = true;
  bool baseline = false;

  LossWeights lambda;
  std::size_t claim_classes = 2;
  std::size_t service_classes = 2;
  std::uint64_t seed = 0;

  // Architecture switches for `variant`; dimensions and classes copied in.
  static ModelConfig ForVariant(Variant variant, const featurize::Vocabulary& vocab,
                                std::size_t claim_classes, std::size_t service_classes);
  void ApplyVariant(Variant variant);
  void Validate() const;
  std::size_t input_dim(featurize::Category c) const;
};

struct Prediction {
  double p_denial = 0.0;
  std::vector<double> claim_code_dist;
  std::vector<double> service_code_dist;
  double response_days = 0.0;
};

struct LossComponents {
  double bce = 0.0;
  double cce_claim = 0.0;
  double cce_service = 0.0;
  double l1 = 0.0;
};

// BCE + l0 * CCE_claim + l1 * CCE_service + l2 * L1.
double CombineLosses(const LossComponents& parts, const LossWeights& lambda);

// Per-claim losses of an already computed prediction.
LossComponents ComputeLosses(const Prediction& pred, const ingest::TargetVector& y);

// Graph handles for one context's gated layer.
struct ContextVars {
  diffkit::Var wf, bf;
  diffkit::Var wg, bg;  // unused when gates are disabled
};

// c = relu(in W_f^T + b_f) * softmax(in W_g^T + b_g), or without the gate
// factor when `gates` is false.
diffkit::Var GatedContext(diffkit::Graph& g, diffkit::Var in, const ContextVars& w,
                          bool gates);
// Same over a sparse input; the two affine nodes are appended to
// `input_nodes` when input gradients are tracked.
diffkit::Var GatedContext(diffkit::Graph& g, const diffkit::SparseRows& in,
                          const ContextVars& w, bool gates, bool track_input_grad,
                          std::vector<diffkit::Var>* input_nodes);

struct FusionVars {
  std::array<diffkit::Var, 3> w;
  std::array<diffkit::Var, 3> gamma;
  std::array<diffkit::Var, 3> beta;
};

// h = relu(BN0(W0 (c_c*c_d)) + BN1(W1 (c_o*c_c)) + BN2(W2 (c_d*c_o))). With
// multipliers off: h = relu(BN0(W0 c_c) + BN1(W1 c_d) + BN2(W2 c_o)).
diffkit::Var Fuse(diffkit::Graph& g, const std::array<diffkit::Var, 3>& contexts,
                  const FusionVars& w, std::array<diffkit::BatchNormState*, 3> bn,
                  bool multipliers);

// Packs one context of a batch as compressed rows.
diffkit::SparseRows StackContext(std::span<const featurize::ClaimVector* const> batch,
                                 featurize::Category c);
// Packs the full concatenated input (x_c, x_d, x_o).
diffkit::SparseRows StackConcatenated(std::span<const featurize::ClaimVector* const> batch);

class Network {
 public:
  explicit Network(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  diffkit::TensorMap& params() { return params_; }
  const diffkit::TensorMap& params() const { return params_; }
  std::map<std::string, diffkit::BatchNormState>& batchnorm() { return bn_; }
  const std::map<std::string, diffkit::BatchNormState>& batchnorm() const { return bn_; }
  std::size_t ParameterCount() const;

  // Switches every batch-norm layer between batch and running statistics.
  void SetTraining(bool training);
  bool training() const { return training_; }

  struct Forward {
    diffkit::Graph graph;
    diffkit::Var embedding;  // h (or the hidden layer of the baseline)
    diffkit::Var p_denial;   // [B x 1]
    diffkit::Var claim_codes;
    diffkit::Var service_codes;
    diffkit::Var response_days;  // [B x 1]
    std::size_t batch = 0;
    // Sparse affine nodes reading each category (or the concatenated input).
    std::vector<std::pair<int, diffkit::Var>> input_nodes;
    std::array<std::size_t, 3> input_dims{};

    std::vector<Prediction> Predictions() const;
    // d(loss)/dx for the dense concatenated input, [B x total_dim]. Needs
    // track_input_grad and a completed Backward.
    diffkit::Tensor InputGradient() const;
  };

  // Records a forward pass. Train mode updates batch-norm running stats.
  Forward Run(std::span<const featurize::ClaimVector* const> batch,
              bool track_input_grad = false);

  std::vector<Prediction> Predict(std::span<const featurize::ClaimVector> claims,
                                  std::size_t batch_size = 512);

  void Save(std::ostream& out, std::uint64_t vocab_hash) const;
  // Throws when `expected_vocab_hash` differs from the stored fingerprint.
  static Network Load(std::istream& in, std::uint64_t expected_vocab_hash);

 private:
  void Init();
  void AddParam(const std::string& name, std::vector<std::size_t> shape,
                std::size_t fan_in, Rng& rng);

  ModelConfig config_;
  diffkit::TensorMap params_;
  std::map<std::string, diffkit::BatchNormState> bn_;
  bool training_ = true;
};

struct LossVars {
  diffkit::Var bce, cce_claim, cce_service, l1, total;
};

// Appends the weighted multi-task objective (batch means) to the graph.
LossVars AddLoss(Network::Forward& fwd, std::span<const ingest::TargetVector* const> y,
                 const LossWeights& lambda);

}  // namespace claimnet::model

#endif  // CLAIMNET_MODEL_H_
