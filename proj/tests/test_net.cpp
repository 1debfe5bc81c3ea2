#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "rcvr/error.hpp"
#include "rcvr/net.hpp"
#include "support.hpp"

using namespace rcvr;

namespace {

ModelInput random_input(Rng& rng, std::size_t rows) {
  ModelInput in;
  FeatureVector f;
  for (auto& v : f) v = rng.uniform();
  in.custom = f;
  PointSequence s(rows);
  for (auto& row : s) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  in.sequence = s;
  return in;
}

NetworkConfig small_config(InputMode mode) {
  NetworkConfig c;
  c.input_mode = mode;
  c.hidden_layers = 2;
  c.hidden_size = 8;
  c.recurrent_size = 4;
  c.seed = 3;
  return c;
}

void check_same_prediction(const Prediction& a, const Prediction& b, double tol) {
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t k = 0; k < kStarLevels; ++k) CHECK(std::abs(a.probabilities[c][k] - b.probabilities[c][k]) <= tol);
  }
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("net") {
  TEST_CASE("analytic gradient matches central differences") {
    for (auto mode : {InputMode::CustomOnly, InputMode::SequenceOnly, InputMode::Combined}) {
      for (auto pooling : {Pooling::Mean, Pooling::Max}) {
        if (mode == InputMode::CustomOnly && pooling == Pooling::Max) continue;
        CAPTURE(to_string(mode));
        CAPTURE(to_string(pooling));
        CHECK(test::worst_gradient_error(mode, pooling) < 1e-4);
      }
    }
  }

  TEST_CASE("initialization is seeded") {
    const auto a = init_model(small_config(InputMode::Combined));
    const auto b = init_model(small_config(InputMode::Combined));
    CHECK(a.params.flatten() == b.params.flatten());
    auto cfg = small_config(InputMode::Combined);
    cfg.seed = 4;
    CHECK(init_model(cfg).params.flatten() != a.params.flatten());
  }

  TEST_CASE("custom preset layer shapes and zero biases") {
    NetworkConfig c;
    c.input_mode = InputMode::CustomOnly;
    c.hidden_layers = 5;
    c.hidden_size = 40;
    const auto m = init_model(c);
    REQUIRE(m.params.hidden.size() == 5);
    CHECK(m.params.hidden[0].weight.cols() == 25);
    for (const auto& l : m.params.hidden) {
      CHECK(l.weight.rows() == 40);
      CHECK(l.bias.isZero(0.0));
    }
    CHECK(m.params.output.weight.rows() == 20);
    CHECK(m.params.output.weight.cols() == 40);
    CHECK(m.params.output.bias.isZero(0.0));
    CHECK(m.params.recurrent.input_weight.size() == 0);
  }

  TEST_CASE("combined input width") {
    auto c = small_config(InputMode::Combined);
    CHECK(c.stack_input_size() == 4 + 25);
    c.input_mode = InputMode::SequenceOnly;
    CHECK(c.stack_input_size() == 4);
    CHECK(init_model(c).params.recurrent.state_weight.rows() == 4);
  }

  TEST_CASE("config validation") {
    auto c = small_config(InputMode::Combined);
    c.hidden_layers = 0;
    CHECK(code_of([&] { init_model(c); }) == ErrorCode::InvalidConfig);
    c = small_config(InputMode::SequenceOnly);
    c.recurrent_size = 0;
    CHECK(code_of([&] { init_model(c); }) == ErrorCode::InvalidConfig);
    c = small_config(InputMode::CustomOnly);
    c.learning_rate = 0.0;
    CHECK(code_of([&] { init_model(c); }) == ErrorCode::InvalidConfig);
  }

  TEST_CASE("head probabilities sum to one") {
    Rng rng(2);
    for (auto mode : {InputMode::CustomOnly, InputMode::SequenceOnly, InputMode::Combined}) {
      const auto m = init_model(small_config(mode));
      for (int i = 0; i < 10; ++i) {
        const auto p = forward(m, random_input(rng, 1 + rng.index(20)));
        for (const auto& head : p.probabilities) {
          CHECK(std::abs(std::accumulate(head.begin(), head.end(), 0.0) - 1.0) < 1e-9);
          for (double v : head) CHECK(v > 0.0);
        }
      }
    }
  }

  TEST_CASE("mean pooling without recurrence is order free") {
    auto m = init_model(small_config(InputMode::SequenceOnly));
    m.params.recurrent.state_weight.setZero();
    Rng rng(8);
    ModelInput in = random_input(rng, 12);
    const Prediction base = forward(m, in);

    ModelInput shuffled = in;
    rng.shuffle(std::span<SequenceRow>(*shuffled.sequence));
    check_same_prediction(forward(m, shuffled), base, 1e-12);

    ModelInput doubled = in;
    doubled.sequence->clear();
    for (const auto& row : *in.sequence) {
      doubled.sequence->push_back(row);
      doubled.sequence->push_back(row);
    }
    check_same_prediction(forward(m, doubled), base, 1e-12);
  }

  TEST_CASE("max pooling is order free without recurrence") {
    auto cfg = small_config(InputMode::SequenceOnly);
    cfg.pooling = Pooling::Max;
    auto m = init_model(cfg);
    m.params.recurrent.state_weight.setZero();
    Rng rng(12);
    ModelInput in = random_input(rng, 9);
    const Prediction base = forward(m, in);
    std::reverse(in.sequence->begin(), in.sequence->end());
    check_same_prediction(forward(m, in), base, 0.0);
  }

  TEST_CASE("repeated identical rows converge to a fixed state") {
    auto m = init_model(small_config(InputMode::SequenceOnly));
    Rng rng(4);
    ModelInput in = random_input(rng, 1);
    const SequenceRow row = in.sequence->front();
    in.sequence->assign(4000, row);
    ModelInput longer = in;
    longer.sequence->assign(8000, row);
    // The mean over many steps is dominated by the fixed point, so doubling
    // the length barely moves the prediction.
    check_same_prediction(forward(m, in), forward(m, longer), 1e-3);
  }

  TEST_CASE("argmax and tie rule") {
    Prediction p;
    p.probabilities[0] = {0.1, 0.1, 0.1, 0.1, 0.6};
    p.probabilities[1] = {0.2, 0.2, 0.2, 0.2, 0.2};
    p.probabilities[2] = {0.1, 0.4, 0.4, 0.05, 0.05};
    p.probabilities[3] = {0.0, 0.0, 0.0, 1.0, 0.0};
    CHECK(p.stars() == StarTuple{5, 1, 2, 4});
  }

  TEST_CASE("missing inputs") {
    Rng rng(1);
    const auto custom = init_model(small_config(InputMode::CustomOnly));
    ModelInput no_custom = random_input(rng, 3);
    no_custom.custom.reset();
    CHECK(code_of([&] { forward(custom, no_custom); }) == ErrorCode::MissingInput);

    const auto seq = init_model(small_config(InputMode::SequenceOnly));
    ModelInput no_seq = random_input(rng, 3);
    no_seq.sequence.reset();
    CHECK(code_of([&] { forward(seq, no_seq); }) == ErrorCode::MissingInput);
    ModelInput empty = random_input(rng, 3);
    empty.sequence->clear();
    CHECK(code_of([&] { forward(seq, empty); }) == ErrorCode::EmptySequence);

    NetworkModel m = custom;
    CHECK(code_of([&] { train(m, {}); }) == ErrorCode::EmptyTrainingSet);
  }

  TEST_CASE("one example is memorized") {
    NetworkConfig c;
    c.input_mode = InputMode::Combined;
    c.hidden_layers = 2;
    c.hidden_size = 10;
    c.recurrent_size = 4;
    c.iterations = 2000;
    c.learning_rate = 0.5;
    NetworkModel m = init_model(c);
    Rng rng(6);
    const std::vector<TrainingExample> one{{std::make_shared<const ModelInput>(random_input(rng, 5)), {4, 2, 5, 1}}};
    const auto result = train(m, one);
    CHECK(result.loss.back() < 0.01);
    CHECK(predict_stars(m, *one.front().input) == StarTuple{4, 2, 5, 1});
  }

  TEST_CASE("training loss never increases") {
    auto [m, examples] = test::tiny_problem(InputMode::Combined, Pooling::Mean);
    m.config.iterations = 300;
    m.config.learning_rate = 5.0;
    const auto result = train(m, examples);
    REQUIRE(result.loss.size() == 300);
    CHECK(result.loss.front() < result.initial_loss);
    for (std::size_t i = 1; i < result.loss.size(); ++i) CHECK(result.loss[i] <= result.loss[i - 1]);
    CHECK(m.loss_history == result.loss);
    CHECK(std::abs(result.loss.back() - loss(m, examples)) < 1e-12);
  }

  TEST_CASE("observer and validation curve") {
    auto [m, examples] = test::tiny_problem(InputMode::CustomOnly, Pooling::Mean);
    m.config.iterations = 25;
    int calls = 0;
    const auto result = train(m, examples, examples, [&](int it, double) { CHECK(it == ++calls); });
    CHECK(calls == 25);
    CHECK(result.validation_mae.size() == 25);
    for (double mae : result.validation_mae) {
      CHECK(mae >= 0.0);
      CHECK(mae <= 4.0);
    }
  }

  TEST_CASE("a non-finite loss is reported as divergence") {
    auto [m, examples] = test::tiny_problem(InputMode::CustomOnly, Pooling::Mean);
    m.config.iterations = 5;
    ModelInput poisoned = *examples.front().input;
    (*poisoned.custom)[0] = std::nan("");
    examples.front().input = std::make_shared<const ModelInput>(poisoned);
    CHECK(code_of([&] { train(m, examples); }) == ErrorCode::DivergenceDetected);
  }

  TEST_CASE("normalizers are fitted on the active inputs") {
    Rng rng(14);
    std::vector<TrainingExample> ex;
    for (int i = 0; i < 4; ++i) ex.push_back({std::make_shared<const ModelInput>(random_input(rng, 6)), {1, 1, 1, 1}});
    auto m = init_model(small_config(InputMode::CustomOnly));
    fit_normalizers(m, ex);
    CHECK(m.custom_normalizer != Normalizer::identity(kCustomFeatureCount));
    CHECK(m.sequence_normalizer == Normalizer::identity(kSequenceFeatureCount));
    for (const auto& e : ex) {
      for (double v : m.custom_normalizer.apply(*e.input->custom)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }

  TEST_CASE("save and load keep predictions") {
    Rng rng(15);
    for (auto mode : {InputMode::CustomOnly, InputMode::SequenceOnly, InputMode::Combined}) {
      auto [m, examples] = test::tiny_problem(mode, Pooling::Max);
      fit_normalizers(m, examples);
      m.config.iterations = 10;
      train(m, examples);
      const std::string text = serialize_model(m);
      const NetworkModel back = parse_model(text);
      CHECK(serialize_model(back) == text);
      CHECK(back.params.flatten() == m.params.flatten());
      CHECK(back.loss_history == m.loss_history);
      for (int i = 0; i < 10; ++i) {
        const auto in = random_input(rng, 1 + rng.index(8));
        check_same_prediction(forward(back, in), forward(m, in), 0.0);
      }
    }
    const auto dir = test::temp_dir("model-io");
    const auto m = init_model(small_config(InputMode::Combined));
    save_model(m, dir + "/m.rcvrnet.json");
    CHECK(serialize_model(load_model(dir + "/m.rcvrnet.json")) == serialize_model(m));
  }

  TEST_CASE("malformed model files") {
    const std::string good = serialize_model(init_model(small_config(InputMode::CustomOnly)));
    CHECK(code_of([] { parse_model("not json"); }) == ErrorCode::MalformedModel);
    CHECK(code_of([] { parse_model("{}"); }) == ErrorCode::MalformedModel);

    auto doc = nlohmann::json::parse(good);
    doc["format_version"] = 7;
    CHECK(code_of([&] { parse_model(doc.dump()); }) == ErrorCode::VersionUnsupported);

    doc = nlohmann::json::parse(good);
    doc["parameters"]["hidden"].erase(0);
    CHECK(code_of([&] { parse_model(doc.dump()); }) == ErrorCode::MalformedModel);

    doc = nlohmann::json::parse(good);
    doc["parameters"]["output"]["bias"][0] = "x";
    CHECK(code_of([&] { parse_model(doc.dump()); }) == ErrorCode::MalformedModel);

    doc = nlohmann::json::parse(good);
    doc["config"]["hidden_size"] = 9;
    CHECK(code_of([&] { parse_model(doc.dump()); }) == ErrorCode::MalformedModel);
  }

  TEST_CASE("mode and pooling names") {
    for (auto mode : {InputMode::CustomOnly, InputMode::SequenceOnly, InputMode::Combined}) {
      CHECK(parse_input_mode(to_string(mode)) == mode);
    }
    CHECK(parse_pooling(to_string(Pooling::Max)) == Pooling::Max);
    CHECK_THROWS_AS(parse_pooling("median"), Error);
  }
}
