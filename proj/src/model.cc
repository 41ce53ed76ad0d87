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

#include "claimnet/model.h"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "claimnet/rng.h"

namespace claimnet::model {

using diffkit::BatchNormState;
using diffkit::Graph;
using diffkit::SparseRows;
using diffkit::Tensor;
using diffkit::Var;
using featurize::Category;
using featurize::ClaimVector;
using nlohmann::json;

namespace {

constexpr const char* kContextKeys[3] = {"c", "d", "o"};
constexpr const char* kCheckpointFormat = "claimnet-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string Ctx(int layer, int i, const char* what) {
  return fmt::format("ctx{}.{}.{}", layer, kContextKeys[i], what);
}

}  // namespace

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kDeepClaim1: return "deepclaim1";
    case Variant::kDeepClaim2: return "deepclaim2";
    case Variant::kNoMultipliers: return "no_multipliers";
    case Variant::kNoGates: return "no_gates";
    case Variant::kBaselineNN: return "baseline_nn";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  for (Variant v : kAllVariants) {
    if (name == VariantName(v)) return v;
  }
  throw Error(fmt::format("unknown variant '{}'", name));
}

void ModelConfig::ApplyVariant(Variant variant) {
  baseline = false;
  gates_enabled = true;
  multipliers_enabled = true;
  switch (variant) {
    case Variant::kDeepClaim1:
      shared_layers = 2;
      towers = true;
      break;
    case Variant::kDeepClaim2:
      shared_layers = 2;
      towers = false;
      break;
    case Variant::kNoMultipliers:
      shared_layers = 0;
      towers = false;
      multipliers_enabled = false;
      break;
    case Variant::kNoGates:
      shared_layers = 0;
      towers = false;
      multipliers_enabled = false;
      gates_enabled = false;
      break;
    case Variant::kBaselineNN:
      shared_layers = 0;
      towers = false;
      baseline = true;
      break;
  }
}

ModelConfig ModelConfig::ForVariant(Variant variant, const featurize::Vocabulary& vocab,
                                    std::size_t claim_classes,
                                    std::size_t service_classes) {
  ModelConfig cfg;
  cfg.procedure_dim = vocab.size(Category::kProcedure);
  cfg.diagnosis_dim = vocab.size(Category::kDiagnosis);
  cfg.other_dim = vocab.size(Category::kOther);
  cfg.claim_classes = claim_classes;
  cfg.service_classes = service_classes;
  cfg.ApplyVariant(variant);
  return cfg;
}

std::size_t ModelConfig::input_dim(Category c) const {
  switch (c) {
    case Category::kProcedure: return procedure_dim;
    case Category::kDiagnosis: return diagnosis_dim;
    case Category::kOther: return other_dim;
  }
  return 0;
}

void ModelConfig::Validate() const {
  if (procedure_dim < 1 || diagnosis_dim < 1 || other_dim < 1 || context_dim < 1 ||
      embed_dim < 1 || claim_classes < 1 || service_classes < 1) {
    throw Error("model dimensions must be >= 1");
  }
  if (shared_layers < 0) throw Error("shared layer count must be >= 0");
  if (lambda.claim_codes < 0 || lambda.service_codes < 0 || lambda.response_days < 0) {
    throw Error("loss weights must be >= 0");
  }
}

double CombineLosses(const LossComponents& parts, const LossWeights& lambda) {
  return parts.bce + lambda.claim_codes * parts.cce_claim +
         lambda.service_codes * parts.cce_service + lambda.response_days * parts.l1;
}

LossComponents ComputeLosses(const Prediction& pred, const ingest::TargetVector& y) {
  LossComponents parts;
  parts.bce = diffkit::BinaryCrossEntropy(y.y0, pred.p_denial);
  parts.cce_claim = diffkit::CategoricalCrossEntropy(y.y1, pred.claim_code_dist);
  parts.cce_service = diffkit::CategoricalCrossEntropy(y.y2, pred.service_code_dist);
  parts.l1 = diffkit::AbsoluteError(y.y3, pred.response_days);
  return parts;
}

// -------------------------------------------------------------- building blocks

Var GatedContext(Graph& g, Var in, const ContextVars& w, bool gates) {
  const Var f = g.Relu(g.Affine(in, w.wf, w.bf));
  if (!gates) return f;
  return g.Hadamard(f, g.Softmax(g.Affine(in, w.wg, w.bg)));
}

Var GatedContext(Graph& g, const SparseRows& in, const ContextVars& w, bool gates,
                 bool track_input_grad, std::vector<Var>* input_nodes) {
  const Var af = g.SparseAffine(in, w.wf, w.bf, track_input_grad);
  if (input_nodes) input_nodes->push_back(af);
  const Var f = g.Relu(af);
  if (!gates) return f;
  const Var ag = g.SparseAffine(in, w.wg, w.bg, track_input_grad);
  if (input_nodes) input_nodes->push_back(ag);
  return g.Hadamard(f, g.Softmax(ag));
}

Var Fuse(Graph& g, const std::array<Var, 3>& contexts, const FusionVars& w,
         std::array<BatchNormState*, 3> bn, bool multipliers) {
  const std::size_t dim = g.value(contexts[0]).cols();
  for (const Var c : contexts) {
    if (g.value(c).cols() != dim) throw ShapeError("fuse: context dimensions differ");
  }
  std::array<Var, 3> terms;
  if (multipliers) {
    // Pairs (c,d), (o,c), (d,o).
    terms = {g.Hadamard(contexts[0], contexts[1]), g.Hadamard(contexts[2], contexts[0]),
             g.Hadamard(contexts[1], contexts[2])};
  } else {
    terms = contexts;
  }
  std::array<Var, 3> projected;
  for (int i = 0; i < 3; ++i) {
    projected[i] = g.BatchNorm(g.Affine(terms[i], w.w[i], std::nullopt), w.gamma[i],
                               w.beta[i], *bn[i]);
  }
  return g.Relu(g.Add(g.Add(projected[0], projected[1]), projected[2]));
}

SparseRows StackContext(std::span<const ClaimVector* const> batch, Category c) {
  SparseRows rows;
  if (batch.empty()) return rows;
  rows.cols = batch.front()->part(c).dim;
  for (const ClaimVector* x : batch) {
    const auto& part = x->part(c);
    if (part.dim != rows.cols) throw ShapeError("claim vectors disagree on dimension");
    rows.AddRow(part.index, part.value);
  }
  return rows;
}

SparseRows StackConcatenated(std::span<const ClaimVector* const> batch) {
  SparseRows rows;
  if (batch.empty()) return rows;
  rows.cols = batch.front()->total_dim();
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const ClaimVector* x : batch) {
    if (x->total_dim() != rows.cols) throw ShapeError("claim vectors disagree on dimension");
    idx.clear();
    val.clear();
    std::uint32_t offset = 0;
    for (Category c : featurize::kCategories) {
      const auto& part = x->part(c);
      for (std::size_t k = 0; k < part.nnz(); ++k) {
        idx.push_back(offset + part.index[k]);
        val.push_back(part.value[k]);
      }
      offset += static_cast<std::uint32_t>(part.dim);
    }
    rows.AddRow(idx, val);
  }
  return rows;
}

// --------------------------------------------------------------------- Network

Network::Network(ModelConfig config) : config_(std::move(config)) {
  config_.Validate();
  Init();
}

void Network::AddParam(const std::string& name, std::vector<std::size_t> shape,
                       std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  if (fan_in > 0) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.values()) v = rng.Uniform(-limit, limit);
  }
  params_.emplace(name, std::move(t));
}

void Network::Init() {
  Rng rng(config_.seed);
  const std::size_t ctx = config_.context_dim, emb = config_.embed_dim;
  const std::size_t classes[4] = {1, config_.claim_classes, config_.service_classes, 1};

  std::size_t top = emb;
  if (config_.baseline) {
    const std::size_t n = config_.procedure_dim + config_.diagnosis_dim + config_.other_dim;
    AddParam("hidden.W", {ctx, n}, n, rng);
    AddParam("hidden.b", {ctx}, 0, rng);
    top = ctx;
  } else {
    for (int layer = 0; layer < 2; ++layer) {
      for (int i = 0; i < 3; ++i) {
        const std::size_t in =
            layer == 0 ? config_.input_dim(featurize::kCategories[i]) : ctx;
        AddParam(Ctx(layer, i, "Wf"), {ctx, in}, in, rng);
        AddParam(Ctx(layer, i, "bf"), {ctx}, 0, rng);
        if (config_.gates_enabled) {
          AddParam(Ctx(layer, i, "Wg"), {ctx, in}, in, rng);
          AddParam(Ctx(layer, i, "bg"), {ctx}, 0, rng);
        }
        // The OOV column may never be active during training (every training
        // token is in the vocabulary when the threshold is 1), so it starts
        // at zero rather than carrying untrained random weight into test.
        if (layer == 0) {
          for (const char* w : {"Wf", "Wg"}) {
            auto it = params_.find(Ctx(layer, i, w));
            if (it == params_.end()) continue;
            for (std::size_t r = 0; r < ctx; ++r) it->second.at(r, featurize::Vocabulary::kOovIndex) = 0.0;
          }
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      AddParam(fmt::format("fuse{}.W", i), {emb, ctx}, ctx, rng);
      params_.emplace(fmt::format("bn{}.gamma", i), Tensor({emb}, 1.0));
      params_.emplace(fmt::format("bn{}.beta", i), Tensor({emb}, 0.0));
      bn_.emplace(fmt::format("bn{}", i), BatchNormState(emb));
    }
    for (int l = 1; l <= config_.shared_layers; ++l) {
      AddParam(fmt::format("shared{}.W", l), {emb, emb}, emb, rng);
      AddParam(fmt::format("shared{}.b", l), {emb}, 0, rng);
    }
    if (config_.towers) {
      for (int j = 0; j < 4; ++j) {
        AddParam(fmt::format("tower{}.W", j), {emb, emb}, emb, rng);
        AddParam(fmt::format("tower{}.b", j), {emb}, 0, rng);
      }
    }
  }
  for (int j = 0; j < 4; ++j) {
    AddParam(fmt::format("head{}.W", j), {classes[j], top}, top, rng);
    AddParam(fmt::format("head{}.b", j), {classes[j]}, 0, rng);
  }
}

std::size_t Network::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void Network::SetTraining(bool training) {
  training_ = training;
  for (auto& [name, state] : bn_) state.training = training;
}

Network::Forward Network::Run(std::span<const ClaimVector* const> batch,
                              bool track_input_grad) {
  if (batch.empty()) throw Error("forward pass needs at least one claim");
  Forward f;
  f.batch = batch.size();
  f.input_dims = {config_.procedure_dim, config_.diagnosis_dim, config_.other_dim};
  for (Category c : featurize::kCategories) {
    if (batch.front()->part(c).dim != config_.input_dim(c)) {
      throw ShapeError(fmt::format("{} input has {} entries, model expects {}",
                                   featurize::CategoryName(c), batch.front()->part(c).dim,
                                   config_.input_dim(c)));
    }
  }
  Graph& g = f.graph;
  const auto P = [&](const std::string& name) { return g.Parameter(name, params_.at(name)); };

  Var top;
  if (config_.baseline) {
    const SparseRows x = StackConcatenated(batch);
    const Var a = g.SparseAffine(x, P("hidden.W"), P("hidden.b"), track_input_grad);
    if (track_input_grad) f.input_nodes.emplace_back(-1, a);
    top = g.Relu(a);
    f.embedding = top;
  } else {
    std::array<Var, 3> contexts;
    for (int i = 0; i < 3; ++i) {
      const SparseRows x = StackContext(batch, featurize::kCategories[i]);
      ContextVars w0{P(Ctx(0, i, "Wf")), P(Ctx(0, i, "bf")), {}, {}};
      ContextVars w1{P(Ctx(1, i, "Wf")), P(Ctx(1, i, "bf")), {}, {}};
      if (config_.gates_enabled) {
        w0.wg = P(Ctx(0, i, "Wg"));
        w0.bg = P(Ctx(0, i, "bg"));
        w1.wg = P(Ctx(1, i, "Wg"));
        w1.bg = P(Ctx(1, i, "bg"));
      }
      std::vector<Var> nodes;
      const Var c0 = GatedContext(g, x, w0, config_.gates_enabled, track_input_grad,
                                  track_input_grad ? &nodes : nullptr);
      for (const Var v : nodes) f.input_nodes.emplace_back(i, v);
      contexts[i] = GatedContext(g, c0, w1, config_.gates_enabled);
    }
    FusionVars fv;
    std::array<BatchNormState*, 3> states;
    for (int i = 0; i < 3; ++i) {
      fv.w[i] = P(fmt::format("fuse{}.W", i));
      fv.gamma[i] = P(fmt::format("bn{}.gamma", i));
      fv.beta[i] = P(fmt::format("bn{}.beta", i));
      states[i] = &bn_.at(fmt::format("bn{}", i));
    }
    f.embedding = Fuse(g, contexts, fv, states, config_.multipliers_enabled);
    top = f.embedding;
    for (int l = 1; l <= config_.shared_layers; ++l) {
      top = g.Relu(g.Affine(top, P(fmt::format("shared{}.W", l)),
                            P(fmt::format("shared{}.b", l))));
    }
  }

  std::array<Var, 4> task_inputs;
  for (int j = 0; j < 4; ++j) {
    task_inputs[j] = config_.towers ? g.Relu(g.Affine(top, P(fmt::format("tower{}.W", j)),
                                                      P(fmt::format("tower{}.b", j))))
                                    : top;
  }
  const auto head = [&](int j) {
    return g.Affine(task_inputs[j], P(fmt::format("head{}.W", j)),
                    P(fmt::format("head{}.b", j)));
  };
  f.p_denial = g.Sigmoid(head(0));
  f.claim_codes = g.Softmax(head(1));
  f.service_codes = g.Softmax(head(2));
  f.response_days = head(3);
  return f;
}

std::vector<Prediction> Network::Forward::Predictions() const {
  const Tensor& p = graph.value(p_denial);
  const Tensor& q1 = graph.value(claim_codes);
  const Tensor& q2 = graph.value(service_codes);
  const Tensor& days = graph.value(response_days);
  std::vector<Prediction> out(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    out[r].p_denial = p[r];
    out[r].claim_code_dist.assign(q1.data() + r * q1.cols(), q1.data() + (r + 1) * q1.cols());
    out[r].service_code_dist.assign(q2.data() + r * q2.cols(),
                                    q2.data() + (r + 1) * q2.cols());
    out[r].response_days = days[r];
  }
  return out;
}

Tensor Network::Forward::InputGradient() const {
  if (input_nodes.empty()) throw Error("forward pass did not track input gradients");
  const std::size_t total = input_dims[0] + input_dims[1] + input_dims[2];
  Tensor out({batch, total});
  for (const auto& [segment, node] : input_nodes) {
    const Tensor& gi = graph.input_grad(node);
    std::size_t offset = 0;
    for (int s = 0; s < segment; ++s) offset += input_dims[s];
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t k = 0; k < gi.cols(); ++k) out.at(r, offset + k) += gi.at(r, k);
    }
  }
  return out;
}

std::vector<Prediction> Network::Predict(std::span<const ClaimVector> claims,
                                         std::size_t batch_size) {
  const bool was_training = training_;
  SetTraining(false);
  std::vector<Prediction> out;
  out.reserve(claims.size());
  try {
    std::vector<const ClaimVector*> ptrs;
    for (std::size_t start = 0; start < claims.size(); start += batch_size) {
      ptrs.clear();
      for (std::size_t i = start; i < std::min(claims.size(), start + batch_size); ++i) {
        ptrs.push_back(&claims[i]);
      }
      for (auto& p : Run(ptrs).Predictions()) out.push_back(std::move(p));
    }
  } catch (...) {
    SetTraining(was_training);
    throw;
  }
  SetTraining(was_training);
  return out;
}

// ------------------------------------------------------------------ checkpoint

namespace {

json ConfigToJson(const ModelConfig& c) {
  return {{"procedure_dim", c.procedure_dim},
          {"diagnosis_dim", c.diagnosis_dim},
          {"other_dim", c.other_dim},
          {"context_dim", c.context_dim},
          {"embed_dim", c.embed_dim},
          {"shared_layers", c.shared_layers},
          {"towers", c.towers},
          {"gates_enabled", c.gates_enabled},
          {"multipliers_enabled", c.multipliers_enabled},
          {"baseline", c.baseline},
          {"lambda", {c.lambda.claim_codes, c.lambda.service_codes, c.lambda.response_days}},
          {"claim_classes", c.claim_classes},
          {"service_classes", c.service_classes},
          {"seed", c.seed}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  c.procedure_dim = j.at("procedure_dim").get<std::size_t>();
  c.diagnosis_dim = j.at("diagnosis_dim").get<std::size_t>();
  c.other_dim = j.at("other_dim").get<std::size_t>();
  c.context_dim = j.at("context_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.shared_layers = j.at("shared_layers").get<int>();
  c.towers = j.at("towers").get<bool>();
  c.gates_enabled = j.at("gates_enabled").get<bool>();
  c.multipliers_enabled = j.at("multipliers_enabled").get<bool>();
  c.baseline = j.at("baseline").get<bool>();
  const auto lambda = j.at("lambda").get<std::vector<double>>();
  if (lambda.size() != 3) throw Error("checkpoint: lambda must have three entries");
  c.lambda = {lambda[0], lambda[1], lambda[2]};
  c.claim_classes = j.at("claim_classes").get<std::size_t>();
  c.service_classes = j.at("service_classes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void Network::Save(std::ostream& out, std::uint64_t vocab_hash) const {
  json obj;
  obj["format"] = kCheckpointFormat;
  obj["version"] = kCheckpointVersion;
  obj["vocab_hash"] = fmt::format("{:016x}", vocab_hash);
  obj["config"] = ConfigToJson(config_);
  json params = json::object();
  for (const auto& [name, t] : params_) {
    params[name] = {{"shape", t.shape()}, {"values", t.vec()}};
  }
  obj["params"] = std::move(params);
  json bn = json::object();
  for (const auto& [name, s] : bn_) {
    bn[name] = {{"running_mean", s.running_mean}, {"running_var", s.running_var},
                {"momentum", s.momentum},         {"epsilon", s.epsilon},
                {"initialized", s.initialized}};
  }
  obj["batchnorm"] = std::move(bn);
  out << obj.dump() << '\n';
}

Network Network::Load(std::istream& in, std::uint64_t expected_vocab_hash) {
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(fmt::format("checkpoint: {}", e.what()));
  }
  try {
    if (obj.at("format").get<std::string>() != kCheckpointFormat ||
        obj.at("version").get<int>() != kCheckpointVersion) {
      throw Error("checkpoint: unrecognized format or version");
    }
    const std::string stored = obj.at("vocab_hash").get<std::string>();
    const std::string expected = fmt::format("{:016x}", expected_vocab_hash);
    if (stored != expected) {
      throw Error(fmt::format(
          "checkpoint was trained with vocabulary {} but vocabulary {} was supplied",
          stored, expected));
    }
    Network net(ConfigFromJson(obj.at("config")));
    const json& params = obj.at("params");
    if (params.size() != net.params_.size()) {
      throw Error("checkpoint: parameter set does not match the configuration");
    }
    for (auto& [name, t] : net.params_) {
      const json& p = params.at(name);
      Tensor loaded(p.at("shape").get<std::vector<std::size_t>>(),
                    p.at("values").get<std::vector<double>>());
      if (!loaded.SameShape(t)) {
        throw Error(fmt::format("checkpoint: parameter {} has shape {}, expected {}", name,
                                loaded.ShapeString(), t.ShapeString()));
      }
      t = std::move(loaded);
    }
    for (auto& [name, s] : net.bn_) {
      const json& b = obj.at("batchnorm").at(name);
      s.running_mean = b.at("running_mean").get<std::vector<double>>();
      s.running_var = b.at("running_var").get<std::vector<double>>();
      s.momentum = b.at("momentum").get<double>();
      s.epsilon = b.at("epsilon").get<double>();
      s.initialized = b.at("initialized").get<bool>();
      if (s.running_mean.size() != net.config_.embed_dim ||
          s.running_var.size() != net.config_.embed_dim) {
        throw Error(fmt::format("checkpoint: batchnorm {} has the wrong width", name));
      }
    }
    net.SetTraining(false);
    return net;
  } catch (const json::exception& e) {
    throw Error(fmt::format("checkpoint: {}", e.what()));
  }
}

LossVars AddLoss(Network::Forward& fwd, std::span<const ingest::TargetVector* const> y,
                 const LossWeights& lambda) {
  Graph& g = fwd.graph;
  const std::size_t batch = fwd.batch;
  if (y.size() != batch) throw ShapeError("targets and batch differ in size");
  const std::size_t k1 = g.value(fwd.claim_codes).cols();
  const std::size_t k2 = g.value(fwd.service_codes).cols();
  Tensor y0({batch, 1}), y1({batch, k1}), y2({batch, k2}), y3({batch, 1});
  for (std::size_t r = 0; r < batch; ++r) {
    const ingest::TargetVector& t = *y[r];
    if (t.y1.size() != k1 || t.y2.size() != k2) {
      throw ShapeError(fmt::format("target has {}/{} reason classes, model has {}/{}",
                                   t.y1.size(), t.y2.size(), k1, k2));
    }
    y0[r] = t.y0;
    std::copy(t.y1.begin(), t.y1.end(), y1.data() + r * k1);
    std::copy(t.y2.begin(), t.y2.end(), y2.data() + r * k2);
    y3[r] = t.y3;
  }
  LossVars lv;
  lv.bce = g.BceLoss(fwd.p_denial, y0);
  lv.cce_claim = g.CceLoss(fwd.claim_codes, y1);
  lv.cce_service = g.CceLoss(fwd.service_codes, y2);
  lv.l1 = g.L1Loss(fwd.response_days, y3);
  lv.total = g.WeightedSum({{lv.bce, 1.0},
                            {lv.cce_claim, lambda.claim_codes},
                            {lv.cce_service, lambda.service_codes},
                            {lv.l1, lambda.response_days}});
  return lv;
}

}  // namespace claimnet::model
