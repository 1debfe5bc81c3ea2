#include "rcvr/net.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rcvr/error.hpp"
#include "rcvr/io.hpp"
#include "rcvr/random.hpp"

namespace rcvr {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn(p.recurrent.input_weight);
  fn(p.recurrent.state_weight);
  fn(p.recurrent.bias);
  for (auto& layer : p.hidden) {
    fn(layer.weight);
    fn(layer.bias);
  }
  fn(p.output.weight);
  fn(p.output.bias);
}

MatrixXd sigmoid(const MatrixXd& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

Parameters zeros_like(const Parameters& p) {
  Parameters z = p;
  for_each_tensor(z, [](auto& t) { t.setZero(); });
  return z;
}

// One distinct input with everything its examples contribute to the loss.
struct Group {
  MatrixXd sequence;  // 7 x T, normalized
  VectorXd custom;    // 25, normalized
  double count = 0.0;
  std::array<std::array<double, kStarLevels>, kCategoryCount> target_counts{};
  std::vector<int> nausea_targets;
};

Group prepare(const NetworkModel& model, const ModelInput& input) {
  const auto& cfg = model.config;
  Group g;
  if (cfg.uses_custom()) {
    if (!input.custom) throw Error(ErrorCode::MissingInput, "custom feature vector required");
    g.custom.resize(kCustomFeatureCount);
    for (std::size_t d = 0; d < kCustomFeatureCount; ++d) {
      g.custom[static_cast<Index>(d)] = model.custom_normalizer.apply(d, (*input.custom)[d]);
    }
  }
  if (cfg.uses_sequence()) {
    if (!input.sequence) throw Error(ErrorCode::MissingInput, "point sequence required");
    if (input.sequence->empty()) throw Error(ErrorCode::EmptySequence, "point sequence is empty");
    const auto& rows = *input.sequence;
    g.sequence.resize(kSequenceFeatureCount, static_cast<Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (std::size_t d = 0; d < kSequenceFeatureCount; ++d) {
        g.sequence(static_cast<Index>(d), static_cast<Index>(t)) = model.sequence_normalizer.apply(d, rows[t][d]);
      }
    }
  }
  return g;
}

void check_target(const StarTuple& target) {
  for (int s : target) {
    if (s < kMinStars || s > kMaxStars) throw Error(ErrorCode::InvariantViolation, "target stars in 1..5");
  }
}

std::vector<Group> group_examples(const NetworkModel& model, std::span<const TrainingExample> examples) {
  std::vector<Group> groups;
  std::map<const ModelInput*, std::size_t> slot_of;
  for (const auto& ex : examples) {
    if (!ex.input) throw Error(ErrorCode::MissingInput, "training example without input");
    check_target(ex.target);
    auto [it, fresh] = slot_of.try_emplace(ex.input.get(), groups.size());
    if (fresh) groups.push_back(prepare(model, *ex.input));
    auto& g = groups[it->second];
    g.count += 1.0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) g.target_counts[c][ex.target[c] - 1] += 1.0;
    g.nausea_targets.push_back(ex.target[static_cast<std::size_t>(Category::Nausea)]);
  }
  return groups;
}

struct SequenceTrace {
  MatrixXd states;  // R x T
  VectorXd pooled;
  std::vector<Index> argmax;  // Max pooling only
};

SequenceTrace run_recurrent(const RecurrentLayer& rnn, const MatrixXd& x, Pooling pooling) {
  const Index r = rnn.bias.size();
  const Index steps = x.cols();
  SequenceTrace tr;
  MatrixXd pre = rnn.input_weight * x;
  pre.colwise() += rnn.bias;
  tr.states.resize(r, steps);
  for (Index t = 0; t < steps; ++t) {
    auto h = tr.states.col(t);
    if (t == 0) {
      h = pre.col(0);  // h_0 = 0
    } else {
      h.noalias() = rnn.state_weight * tr.states.col(t - 1);
      h += pre.col(t);
    }
    h = (1.0 + (-h.array()).exp()).inverse().matrix();
  }
  if (pooling == Pooling::Mean) {
    tr.pooled = tr.states.rowwise().mean();
  } else {
    tr.pooled.resize(r);
    tr.argmax.resize(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) {
      Index best = 0;
      tr.pooled[i] = tr.states.row(i).maxCoeff(&best);
      tr.argmax[static_cast<std::size_t>(i)] = best;
    }
  }
  return tr;
}

void backprop_recurrent(const RecurrentLayer& rnn, const MatrixXd& x, const SequenceTrace& tr, const VectorXd& d_pooled,
                        Pooling pooling, RecurrentLayer& grad) {
  const Index r = rnn.bias.size();
  const Index steps = x.cols();
  MatrixXd d_pre(r, steps);
  VectorXd carry = VectorXd::Zero(r);
  VectorXd dh(r);
  const VectorXd mean_share = d_pooled / static_cast<double>(steps);
  for (Index t = steps - 1; t >= 0; --t) {
    dh = carry;
    if (pooling == Pooling::Mean) {
      dh += mean_share;
    } else {
      for (Index i = 0; i < r; ++i) {
        if (tr.argmax[static_cast<std::size_t>(i)] == t) dh[i] += d_pooled[i];
      }
    }
    const auto h = tr.states.col(t).array();
    d_pre.col(t) = (dh.array() * h * (1.0 - h)).matrix();
    carry.noalias() = rnn.state_weight.transpose() * d_pre.col(t);
  }
  grad.input_weight.noalias() += d_pre * x.transpose();
  grad.bias += d_pre.rowwise().sum();
  if (steps > 1) {
    grad.state_weight.noalias() += d_pre.rightCols(steps - 1) * tr.states.leftCols(steps - 1).transpose();
  }
}

struct StackTrace {
  std::vector<MatrixXd> activations;  // [0] stack input, [l] hidden layer l
  MatrixXd logits;                    // 20 x G
  MatrixXd probabilities;             // 20 x G
};

void softmax_heads(const MatrixXd& logits, MatrixXd& probs) {
  probs.resize(logits.rows(), logits.cols());
  for (Index col = 0; col < logits.cols(); ++col) {
    for (Index head = 0; head < static_cast<Index>(kCategoryCount); ++head) {
      const auto block = logits.col(col).segment(head * kStarLevels, kStarLevels);
      const double top = block.maxCoeff();
      const VectorXd e = (block.array() - top).exp().matrix();
      probs.col(col).segment(head * kStarLevels, kStarLevels) = e / e.sum();
    }
  }
}

StackTrace run_stack(const Parameters& p, MatrixXd input) {
  StackTrace tr;
  tr.activations.push_back(std::move(input));
  for (const auto& layer : p.hidden) {
    MatrixXd z = layer.weight * tr.activations.back();
    z.colwise() += layer.bias;
    tr.activations.push_back(sigmoid(z));
  }
  tr.logits = p.output.weight * tr.activations.back();
  tr.logits.colwise() += p.output.bias;
  softmax_heads(tr.logits, tr.probabilities);
  return tr;
}

struct Pass {
  double loss = 0.0;
  std::vector<SequenceTrace> sequences;
  StackTrace stack;
};

Pass forward_groups(const NetworkModel& model, const std::vector<Group>& groups) {
  const auto& cfg = model.config;
  Pass pass;
  const Index width = cfg.stack_input_size();
  MatrixXd input(width, static_cast<Index>(groups.size()));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto col = static_cast<Index>(gi);
    Index offset = 0;
    if (cfg.uses_sequence()) {
      pass.sequences.push_back(run_recurrent(model.params.recurrent, groups[gi].sequence, cfg.pooling));
      const auto& pooled = pass.sequences.back().pooled;
      input.col(col).head(pooled.size()) = pooled;
      offset = pooled.size();
    }
    if (cfg.uses_custom()) input.col(col).segment(offset, groups[gi].custom.size()) = groups[gi].custom;
  }
  pass.stack = run_stack(model.params, std::move(input));
  return pass;
}

double group_loss(const Pass& pass, const std::vector<Group>& groups) {
  double total = 0.0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto col = static_cast<Index>(gi);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      const auto block = pass.stack.logits.col(col).segment(static_cast<Index>(c * kStarLevels), kStarLevels);
      const double top = block.maxCoeff();
      const double lse = top + std::log((block.array() - top).exp().sum());
      for (std::size_t k = 0; k < kStarLevels; ++k) {
        const double n = groups[gi].target_counts[c][k];
        if (n > 0.0) total -= n * (block[static_cast<Index>(k)] - lse);
      }
    }
  }
  return total;
}

// A step that raises the loss is retried at half the size, so the recorded
// loss never increases. The next iteration starts from the accepted step
// grown by kStepGrowth, capped at the configured learning rate.
constexpr int kMaxStepHalvings = 30;
constexpr double kStepGrowth = 1.1;

void descend(Parameters& p, const Parameters& grad, double step) {
  p.recurrent.input_weight -= step * grad.recurrent.input_weight;
  p.recurrent.state_weight -= step * grad.recurrent.state_weight;
  p.recurrent.bias -= step * grad.recurrent.bias;
  for (std::size_t l = 0; l < p.hidden.size(); ++l) {
    p.hidden[l].weight -= step * grad.hidden[l].weight;
    p.hidden[l].bias -= step * grad.hidden[l].bias;
  }
  p.output.weight -= step * grad.output.weight;
  p.output.bias -= step * grad.output.bias;
}

double evaluate(const NetworkModel& model, const std::vector<Group>& groups, double n_examples, Parameters* grad) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  Pass pass = forward_groups(model, groups);
  const double loss_value = group_loss(pass, groups) / n_examples;
  if (!grad) return loss_value;

  *grad = zeros_like(p);
  const Index g_count = static_cast<Index>(groups.size());
  MatrixXd delta(kOutputSize, g_count);
  for (Index col = 0; col < g_count; ++col) {
    const auto& g = groups[static_cast<std::size_t>(col)];
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      for (std::size_t k = 0; k < kStarLevels; ++k) {
        const Index row = static_cast<Index>(c * kStarLevels + k);
        delta(row, col) = (g.count * pass.stack.probabilities(row, col) - g.target_counts[c][k]) / n_examples;
      }
    }
  }

  const auto& acts = pass.stack.activations;
  grad->output.weight.noalias() = delta * acts.back().transpose();
  grad->output.bias = delta.rowwise().sum();
  MatrixXd d_act = p.output.weight.transpose() * delta;
  for (std::size_t l = p.hidden.size(); l-- > 0;) {
    const auto& a = acts[l + 1].array();
    const MatrixXd d_pre = (d_act.array() * a * (1.0 - a)).matrix();
    grad->hidden[l].weight.noalias() = d_pre * acts[l].transpose();
    grad->hidden[l].bias = d_pre.rowwise().sum();
    d_act = p.hidden[l].weight.transpose() * d_pre;
  }

  if (cfg.uses_sequence()) {
    const Index r = cfg.recurrent_size;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const VectorXd d_pooled = d_act.col(static_cast<Index>(gi)).head(r);
      backprop_recurrent(p.recurrent, groups[gi].sequence, pass.sequences[gi], d_pooled, cfg.pooling,
                         grad->recurrent);
    }
  }
  return loss_value;
}

int argmax_star(const MatrixXd& probs, Index col, std::size_t category) {
  const auto block = probs.col(col).segment(static_cast<Index>(category * kStarLevels), kStarLevels);
  Index best = 0;
  for (Index k = 1; k < static_cast<Index>(kStarLevels); ++k) {
    if (block[k] > block[best]) best = k;
  }
  return static_cast<int>(best) + 1;
}

double nausea_mae(const NetworkModel& model, const std::vector<Group>& groups) {
  if (groups.empty()) return 0.0;
  const Pass pass = forward_groups(model, groups);
  double err = 0.0;
  double n = 0.0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const int star = argmax_star(pass.stack.probabilities, static_cast<Index>(gi),
                                 static_cast<std::size_t>(Category::Nausea));
    for (int target : groups[gi].nausea_targets) {
      err += std::abs(star - target);
      n += 1.0;
    }
  }
  return err / n;
}

// Uniform bound multiplier for weights feeding a sigmoid. Without it a deep
// sigmoid stack sits on the class-prior plateau for thousands of iterations.
constexpr double kSigmoidGain = 4.0;

MatrixXd xavier(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng, double gain = 1.0) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

// ---- serialization helpers ----

ordered_json matrix_json(const MatrixXd& m) {
  ordered_json out;
  out["rows"] = m.rows();
  out["cols"] = m.cols();
  json::array_t data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  out["data"] = data;
  return out;
}

ordered_json vector_json(const VectorXd& v) { return ordered_json(std::vector<double>(v.begin(), v.end())); }

MatrixXd matrix_from(const json& doc, Index rows, Index cols, const std::string& what) {
  if (doc.at("rows").get<Index>() != rows || doc.at("cols").get<Index>() != cols) {
    throw Error(ErrorCode::MalformedModel, what + " has the wrong shape");
  }
  const auto& data = doc.at("data");
  if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::MalformedModel, what + " has the wrong element count");
  }
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

VectorXd vector_from(const json& doc, Index size, const std::string& what) {
  if (!doc.is_array() || static_cast<Index>(doc.size()) != size) {
    throw Error(ErrorCode::MalformedModel, what + " has the wrong size");
  }
  VectorXd v(size);
  for (Index i = 0; i < size; ++i) v[i] = doc[static_cast<std::size_t>(i)].get<double>();
  return v;
}

ordered_json normalizer_json(const Normalizer& n) {
  ordered_json out;
  out["lo"] = n.lo();
  out["hi"] = n.hi();
  return out;
}

Normalizer normalizer_from(const json& doc, std::size_t dim, const std::string& what) {
  auto lo = doc.at("lo").get<std::vector<double>>();
  auto hi = doc.at("hi").get<std::vector<double>>();
  if (lo.size() != dim || hi.size() != dim) throw Error(ErrorCode::MalformedModel, what + " normalizer has the wrong size");
  return Normalizer(std::move(lo), std::move(hi));
}

}  // namespace

std::string_view to_string(InputMode mode) {
  switch (mode) {
    case InputMode::CustomOnly: return "custom";
    case InputMode::SequenceOnly: return "sequence";
    case InputMode::Combined: return "combined";
  }
  return "?";
}

std::string_view to_string(Pooling pooling) { return pooling == Pooling::Mean ? "mean" : "max"; }

InputMode parse_input_mode(std::string_view text) {
  if (text == "custom") return InputMode::CustomOnly;
  if (text == "sequence") return InputMode::SequenceOnly;
  if (text == "combined") return InputMode::Combined;
  throw Error(ErrorCode::InvalidConfig, "unknown input mode \"" + std::string(text) + "\"");
}

Pooling parse_pooling(std::string_view text) {
  if (text == "mean") return Pooling::Mean;
  if (text == "max") return Pooling::Max;
  throw Error(ErrorCode::InvalidConfig, "unknown pooling \"" + std::string(text) + "\"");
}

int NetworkConfig::stack_input_size() const {
  int width = 0;
  if (uses_sequence()) width += recurrent_size;
  if (uses_custom()) width += static_cast<int>(kCustomFeatureCount);
  return width;
}

void NetworkConfig::validate() const {
  if (hidden_layers < 1) throw Error(ErrorCode::InvalidConfig, "hidden_layers >= 1");
  if (hidden_size < 1) throw Error(ErrorCode::InvalidConfig, "hidden_size >= 1");
  if (uses_sequence() && recurrent_size < 1) throw Error(ErrorCode::InvalidConfig, "recurrent_size >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error(ErrorCode::InvalidConfig, "learning_rate > 0");
  if (iterations < 0) throw Error(ErrorCode::InvalidConfig, "iterations >= 0");
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

std::vector<double> Parameters::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for_each_tensor(*this, [&](const auto& t) {
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) out.push_back(t(r, c));
    }
  });
  return out;
}

void Parameters::unflatten(std::span<const double> values) {
  if (values.size() != size()) throw Error(ErrorCode::InvariantViolation, "parameter count mismatch");
  std::size_t i = 0;
  for_each_tensor(*this, [&](auto& t) {
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) t(r, c) = values[i++];
    }
  });
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

ModelInput make_input(const Track& track) { return {extract_custom(track), extract_sequence(track)}; }

StarTuple Prediction::stars() const {
  StarTuple out{};
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    const auto& p = probabilities[c];
    std::size_t best = 0;
    for (std::size_t k = 1; k < kStarLevels; ++k) {
      if (p[k] > p[best]) best = k;
    }
    out[c] = static_cast<int>(best) + 1;
  }
  return out;
}

NetworkModel init_model(const NetworkConfig& config) {
  config.validate();
  NetworkModel model;
  model.config = config;
  model.custom_normalizer = Normalizer::identity(kCustomFeatureCount);
  model.sequence_normalizer = Normalizer::identity(kSequenceFeatureCount);

  Rng rng(config.seed);
  auto& p = model.params;
  const Index r = config.uses_sequence() ? config.recurrent_size : 0;
  const Index seq_in = static_cast<Index>(kSequenceFeatureCount);
  p.recurrent.input_weight = r ? xavier(r, seq_in, seq_in, r, rng, kSigmoidGain) : MatrixXd(0, seq_in);
  p.recurrent.state_weight = r ? xavier(r, r, r, r, rng) : MatrixXd(0, 0);
  p.recurrent.bias = VectorXd::Zero(r);

  Index fan_in = config.stack_input_size();
  for (int l = 0; l < config.hidden_layers; ++l) {
    const Index out = config.hidden_size;
    p.hidden.push_back({xavier(out, fan_in, fan_in, out, rng, kSigmoidGain), VectorXd::Zero(out)});
    fan_in = out;
  }
  p.output = {xavier(kOutputSize, fan_in, fan_in, kOutputSize, rng), VectorXd::Zero(kOutputSize)};
  return model;
}

void fit_normalizers(NetworkModel& model, std::span<const TrainingExample> examples) {
  NormalizerFitter custom(kCustomFeatureCount);
  NormalizerFitter sequence(kSequenceFeatureCount);
  std::map<const ModelInput*, bool> seen;
  for (const auto& ex : examples) {
    if (!ex.input || !seen.try_emplace(ex.input.get(), true).second) continue;
    if (model.config.uses_custom() && ex.input->custom) custom.add(*ex.input->custom);
    if (model.config.uses_sequence() && ex.input->sequence) {
      for (const auto& row : *ex.input->sequence) sequence.add(row);
    }
  }
  if (model.config.uses_custom()) model.custom_normalizer = custom.finish();
  if (model.config.uses_sequence()) model.sequence_normalizer = sequence.finish();
}

Prediction forward(const NetworkModel& model, const ModelInput& input) {
  const std::vector<Group> groups{prepare(model, input)};
  const Pass pass = forward_groups(model, groups);
  Prediction out;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t k = 0; k < kStarLevels; ++k) {
      out.probabilities[c][k] = pass.stack.probabilities(static_cast<Index>(c * kStarLevels + k), 0);
    }
  }
  return out;
}

StarTuple predict_stars(const NetworkModel& model, const ModelInput& input) { return forward(model, input).stars(); }

double loss(const NetworkModel& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no examples");
  const auto groups = group_examples(model, examples);
  return evaluate(model, groups, static_cast<double>(examples.size()), nullptr);
}

Parameters gradient(const NetworkModel& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no examples");
  const auto groups = group_examples(model, examples);
  Parameters grad;
  evaluate(model, groups, static_cast<double>(examples.size()), &grad);
  return grad;
}

TrainResult train(NetworkModel& model, std::span<const TrainingExample> examples,
                  std::span<const TrainingExample> validation, const IterationObserver& observer) {
  model.config.validate();
  if (examples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training examples");
  const auto groups = group_examples(model, examples);
  const auto held_out = group_examples(model, validation);
  const double n = static_cast<double>(examples.size());
  const double lr = model.config.learning_rate;

  TrainResult result;
  Parameters grad;
  result.initial_loss = evaluate(model, groups, n, &grad);
  if (!std::isfinite(result.initial_loss)) throw Error(ErrorCode::DivergenceDetected, "initial loss is not finite");

  double current = result.initial_loss;
  double step = lr;
  Parameters trial_grad;
  for (int it = 1; it <= model.config.iterations; ++it) {
    const Parameters start = model.params;
    double value = current;
    for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt, step *= 0.5) {
      model.params = start;
      descend(model.params, grad, step);
      const double trial = evaluate(model, groups, n, &trial_grad);
      if (!std::isfinite(trial) || !model.params.all_finite()) {
        throw Error(ErrorCode::DivergenceDetected, "loss became non-finite at iteration " + std::to_string(it));
      }
      if (trial <= current) {
        value = trial;
        std::swap(grad, trial_grad);
        break;
      }
      if (attempt == kMaxStepHalvings) model.params = start;
    }
    step = std::min(lr, kStepGrowth * step);
    current = value;
    result.loss.push_back(value);
    model.loss_history.push_back(value);
    if (!held_out.empty()) result.validation_mae.push_back(nausea_mae(model, held_out));
    if (observer) observer(it, value);
  }
  return result;
}

json config_to_json(const NetworkConfig& config) {
  json out;
  out["input_mode"] = to_string(config.input_mode);
  out["hidden_layers"] = config.hidden_layers;
  out["hidden_size"] = config.hidden_size;
  out["recurrent_size"] = config.recurrent_size;
  out["pooling"] = to_string(config.pooling);
  out["learning_rate"] = config.learning_rate;
  out["iterations"] = config.iterations;
  out["seed"] = config.seed;
  return out;
}

NetworkConfig config_from_json(const json& doc) {
  NetworkConfig c;
  c.input_mode = parse_input_mode(doc.at("input_mode").get<std::string>());
  c.hidden_layers = doc.at("hidden_layers").get<int>();
  c.hidden_size = doc.at("hidden_size").get<int>();
  c.recurrent_size = doc.at("recurrent_size").get<int>();
  c.pooling = parse_pooling(doc.at("pooling").get<std::string>());
  c.learning_rate = doc.at("learning_rate").get<double>();
  c.iterations = doc.at("iterations").get<int>();
  c.seed = doc.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

std::string serialize_model(const NetworkModel& model) {
  const auto& cfg = model.config;
  ordered_json doc;
  doc["format"] = "rcvrnet";
  doc["format_version"] = kModelFormatVersion;
  ordered_json config;
  config["input_mode"] = to_string(cfg.input_mode);
  config["hidden_layers"] = cfg.hidden_layers;
  config["hidden_size"] = cfg.hidden_size;
  config["recurrent_size"] = cfg.recurrent_size;
  config["pooling"] = to_string(cfg.pooling);
  config["learning_rate"] = cfg.learning_rate;
  config["iterations"] = cfg.iterations;
  config["seed"] = cfg.seed;
  doc["config"] = config;

  ordered_json normalizers = ordered_json::object();
  if (cfg.uses_custom()) normalizers["custom"] = normalizer_json(model.custom_normalizer);
  if (cfg.uses_sequence()) normalizers["sequence"] = normalizer_json(model.sequence_normalizer);
  doc["normalizers"] = normalizers;

  ordered_json params;
  if (cfg.uses_sequence()) {
    ordered_json rec;
    rec["input_weight"] = matrix_json(model.params.recurrent.input_weight);
    rec["state_weight"] = matrix_json(model.params.recurrent.state_weight);
    rec["bias"] = vector_json(model.params.recurrent.bias);
    params["recurrent"] = rec;
  }
  ordered_json hidden = ordered_json::array();
  for (const auto& layer : model.params.hidden) {
    ordered_json l;
    l["weight"] = matrix_json(layer.weight);
    l["bias"] = vector_json(layer.bias);
    hidden.push_back(l);
  }
  params["hidden"] = hidden;
  ordered_json output;
  output["weight"] = matrix_json(model.params.output.weight);
  output["bias"] = vector_json(model.params.output.bias);
  params["output"] = output;
  doc["parameters"] = params;
  doc["loss_history"] = model.loss_history;
  return doc.dump() + "\n";
}

NetworkModel parse_model(std::string_view text) {
  try {
    const json doc = json::parse(text.begin(), text.end());
    if (doc.at("format").get<std::string>() != "rcvrnet") throw Error(ErrorCode::MalformedModel, "not an rcvrnet model");
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::VersionUnsupported, "model format_version " + doc.at("format_version").dump());
    }
    NetworkModel model = init_model(config_from_json(doc.at("config")));
    const auto& cfg = model.config;
    const auto& norms = doc.at("normalizers");
    if (cfg.uses_custom()) model.custom_normalizer = normalizer_from(norms.at("custom"), kCustomFeatureCount, "custom");
    if (cfg.uses_sequence()) {
      model.sequence_normalizer = normalizer_from(norms.at("sequence"), kSequenceFeatureCount, "sequence");
    }

    const auto& params = doc.at("parameters");
    auto& p = model.params;
    if (cfg.uses_sequence()) {
      const auto& rec = params.at("recurrent");
      const Index r = cfg.recurrent_size;
      p.recurrent.input_weight = matrix_from(rec.at("input_weight"), r, kSequenceFeatureCount, "recurrent input weight");
      p.recurrent.state_weight = matrix_from(rec.at("state_weight"), r, r, "recurrent state weight");
      p.recurrent.bias = vector_from(rec.at("bias"), r, "recurrent bias");
    }
    const auto& hidden = params.at("hidden");
    if (!hidden.is_array() || hidden.size() != p.hidden.size()) {
      throw Error(ErrorCode::MalformedModel, "hidden layer count does not match config");
    }
    for (std::size_t l = 0; l < p.hidden.size(); ++l) {
      const std::string what = "hidden layer " + std::to_string(l);
      p.hidden[l].weight = matrix_from(hidden[l].at("weight"), p.hidden[l].weight.rows(), p.hidden[l].weight.cols(), what);
      p.hidden[l].bias = vector_from(hidden[l].at("bias"), p.hidden[l].bias.size(), what);
    }
    const auto& output = params.at("output");
    p.output.weight = matrix_from(output.at("weight"), p.output.weight.rows(), p.output.weight.cols(), "output layer");
    p.output.bias = vector_from(output.at("bias"), kOutputSize, "output bias");
    model.loss_history = doc.at("loss_history").get<std::vector<double>>();
    if (!p.all_finite()) throw Error(ErrorCode::MalformedModel, "non-finite parameter");
    return model;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionUnsupported || e.code() == ErrorCode::MalformedModel) throw;
    throw Error(ErrorCode::MalformedModel, e.detail());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModel, e.what());
  }
}

void save_model(const NetworkModel& model, const std::string& path) { write_text_file(path, serialize_model(model)); }

NetworkModel load_model(const std::string& path) { return parse_model(read_text_file(path)); }

}  // namespace rcvr
