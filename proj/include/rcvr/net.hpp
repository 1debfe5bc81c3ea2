#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rcvr/features.hpp"
#include "rcvr/ratings.hpp"
#include "rcvr/track.hpp"

namespace rcvr {

enum class InputMode { CustomOnly, SequenceOnly, Combined };
enum class Pooling { Mean, Max };

std::string_view to_string(InputMode mode);
std::string_view to_string(Pooling pooling);
InputMode parse_input_mode(std::string_view text);
Pooling parse_pooling(std::string_view text);

struct NetworkConfig {
  InputMode input_mode = InputMode::Combined;
  int hidden_layers = 5;
  int hidden_size = 100;
  int recurrent_size = 16;
  Pooling pooling = Pooling::Mean;
  double learning_rate = 0.5;
  int iterations = 3000;
  std::uint64_t seed = 1;

  bool uses_custom() const { return input_mode != InputMode::SequenceOnly; }
  bool uses_sequence() const { return input_mode != InputMode::CustomOnly; }
  /// Width of the vector entering the first hidden layer.
  int stack_input_size() const;

  /// Throws InvalidConfig.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

inline constexpr int kOutputSize = static_cast<int>(kCategoryCount * kStarLevels);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// h_t = sigmoid(input_weight * x_t + state_weight * h_{t-1} + bias), h_0 = 0.
struct RecurrentLayer {
  Eigen::MatrixXd input_weight;  // R x 7
  Eigen::MatrixXd state_weight;  // R x R
  Eigen::VectorXd bias;
};

/// All trainable tensors. Gradients share this shape.
struct Parameters {
  RecurrentLayer recurrent;  // empty in CustomOnly mode
  std::vector<DenseLayer> hidden;
  DenseLayer output;

  std::size_t size() const;
  /// Fixed traversal order: recurrent (input, state, bias), hidden layers
  /// (weight, bias), output (weight, bias); matrices row-major.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
  bool all_finite() const;
};

struct NetworkModel {
  NetworkConfig config;
  Normalizer custom_normalizer;
  Normalizer sequence_normalizer;
  Parameters params;
  std::vector<double> loss_history;
};

struct ModelInput {
  std::optional<FeatureVector> custom;
  std::optional<PointSequence> sequence;
};

/// Both representations of a track.
ModelInput make_input(const Track& track);

struct Prediction {
  std::array<std::array<double, kStarLevels>, kCategoryCount> probabilities{};

  /// Argmax + 1 per head; exact ties resolve to the lower star.
  StarTuple stars() const;
};

struct TrainingExample {
  std::shared_ptr<const ModelInput> input;  // examples sharing a pointer are evaluated once
  StarTuple target{};
};

struct TrainResult {
  double initial_loss = 0.0;
  std::vector<double> loss;            // training loss after each iteration
  std::vector<double> validation_mae;  // nausea mean star error after each iteration
};

/// Xavier-uniform weights from a seeded generator, zero biases, identity
/// normalizers. Throws InvalidConfig.
NetworkModel init_model(const NetworkConfig& config);

/// Fits the active path normalizers on the given examples' inputs.
void fit_normalizers(NetworkModel& model, std::span<const TrainingExample> examples);

/// Throws MissingInput or EmptySequence.
Prediction forward(const NetworkModel& model, const ModelInput& input);
StarTuple predict_stars(const NetworkModel& model, const ModelInput& input);

/// Sum over the four heads of the cross-entropy, averaged over examples.
double loss(const NetworkModel& model, std::span<const TrainingExample> examples);

/// Exact gradient of loss() with respect to every parameter.
Parameters gradient(const NetworkModel& model, std::span<const TrainingExample> examples);

using IterationObserver = std::function<void(int iteration, double loss)>;

/// Full-batch gradient descent for config.iterations passes. Appends to
/// model.loss_history. Throws EmptyTrainingSet or DivergenceDetected.
TrainResult train(NetworkModel& model, std::span<const TrainingExample> examples,
                  std::span<const TrainingExample> validation = {}, const IterationObserver& observer = {});

nlohmann::json config_to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const nlohmann::json& doc);

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const NetworkModel& model);
/// Throws MalformedModel (or VersionUnsupported).
NetworkModel parse_model(std::string_view text);
void save_model(const NetworkModel& model, const std::string& path);
NetworkModel load_model(const std::string& path);

}  // namespace rcvr
