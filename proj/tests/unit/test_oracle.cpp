#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "automl/composer.hpp"
#include "automl/error.hpp"
#include "automl/oracle.hpp"
#include "support.hpp"
// Must follow the Eigen includes (resolv.h `_res` macro).
#include <httplib.h>

using namespace automl;

namespace {

const char* kResponse =
    "Sure, here is the plan.\n"
    "## Data Processing\n"
    "- resize to 224\n"
    "- normalize\n"
    "## Model Architecture\n"
    "vit-base: 12 layers\n"
    "estimate fps=42.5\n"
    "estimate latency_ms=9\n"
    "## Hyperparameter Tuning\n"
    "learning_rate: 3e-4\n"
    "batch_size: 64\n"
    "optimizer: adamw\n"
    "this line is not a parameter\n"
    "## Predicted Training Log\n"
    "epoch 1: train_loss=1.2 val_loss=1.3 val_metric=0.41\n"
    "epoch 2: train_loss=0.9 val_loss=1.0 val_metric=0.55\n";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an automl::Error";
  return ErrorCode::Busy;
}

PromptParagraph fixture_prompt(const char* data, const char* model) {
  return compose_prompt(automl::testing::fixture_data_card(data), automl::testing::fixture_model_card(model));
}

// Local backend stand-in answering from a scripted list of status codes.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
    server_.Post("/complete", [this](const httplib::Request& req, httplib::Response& res) {
      const auto n = calls_.fetch_add(1);
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      const int status = statuses_[std::min<std::size_t>(static_cast<std::size_t>(n), statuses_.size() - 1)];
      res.status = status;
      res.set_content(status == 200 ? kResponse : "nope", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    worker_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    worker_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/complete"; }
  int calls() const { return calls_.load(); }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  std::vector<int> statuses_;
  httplib::Server server_;
  std::thread worker_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_auth_;
  std::string last_body_;
};

struct SleepLog {
  std::vector<long> delays;
  HttpBackend::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { delays.push_back(static_cast<long>(d.count())); };
  }
};

}  // namespace

TEST(Oracle, ParsesAllFourSections) {
  const auto r = parse_response(kResponse);
  EXPECT_EQ(r.data_processing, (std::vector<std::string>{"resize to 224", "normalize"}));
  EXPECT_NE(r.architecture.find("12 layers"), std::string::npos);
  EXPECT_EQ(std::get<double>(r.hyperparameters.at("learning_rate")), 3e-4);
  EXPECT_EQ(std::get<std::int64_t>(r.hyperparameters.at("batch_size")), 64);
  EXPECT_EQ(std::get<std::string>(r.hyperparameters.at("optimizer")), "adamw");
  ASSERT_EQ(r.warnings.size(), 1u);
  ASSERT_EQ(r.predicted_log.entries.size(), 2u);
  EXPECT_EQ(r.predicted_log.final_entry().val_metric, 0.55);
  EXPECT_EQ(r.raw_text, kResponse);
  const auto est = architecture_estimates(r);
  EXPECT_EQ(est.at("fps"), 42.5);
  EXPECT_EQ(est.at("latency_ms"), 9.0);
}

TEST(Oracle, MissingSectionIsReported) {
  std::string text = kResponse;
  text.erase(text.find("## Model Architecture"), std::string("## Model Architecture\n").size());
  EXPECT_EQ(code_of([&] { parse_response(text); }), ErrorCode::MissingSection);
}

TEST(Oracle, EmptyTuningSection) {
  const std::string text =
      "## Data Processing\n- x\n## Model Architecture\nm\n## Hyperparameter Tuning\nnot a pair\n"
      "## Predicted Training Log\nepoch 1: train_loss=1 val_loss=1 val_metric=1\n";
  EXPECT_EQ(code_of([&] { parse_response(text); }), ErrorCode::EmptyHyperparameters);
}

TEST(Oracle, EmptyLogSection) {
  const std::string text =
      "## Data Processing\n- x\n## Model Architecture\nm\n## Hyperparameter Tuning\nlr: 1\n## Predicted Training Log\n\n";
  EXPECT_EQ(code_of([&] { parse_response(text); }), ErrorCode::EmptyLog);
}

TEST(Oracle, BadLogLineInsideResponse) {
  std::string text = kResponse;
  text += "epoch three: loss=1\n";
  EXPECT_EQ(code_of([&] { parse_response(text); }), ErrorCode::BadLogLine);
}

TEST(Oracle, MockSurfaceValues) {
  EXPECT_DOUBLE_EQ(mock_surface(1e-4, 1e-4), 0.95);
  EXPECT_NEAR(mock_surface(1e-3, 1e-4), 0.80, 1e-12);
  EXPECT_EQ(mock_surface(1.0, 1e-4), 0.0);
  EXPECT_EQ(serialize(mock_log(0.95)).substr(serialize(mock_log(0.95)).rfind("epoch 12")),
            "epoch 12: train_loss=0.0183 val_loss=0.0973 val_metric=0.9027\n");
  EXPECT_EQ(format_log_line(parse_training_log(serialize(mock_log(0.80))).final_entry()),
            "epoch 12: train_loss=0.0183 val_loss=0.2398 val_metric=0.7602");
}

TEST(Oracle, MockOptimumReferenceValues) {
  EXPECT_EQ(mock_optimum_lr("New"), 1e-4);
  EXPECT_EQ(mock_optimum_lr("UCI Adult"), 1e-4);
  EXPECT_EQ(mock_optimum_lr("A"), 1e-3);
  EXPECT_EQ(mock_optimum_lr("B"), 1e-3);
  EXPECT_EQ(mock_optimum_lr("COCO"), 1e-5);
  EXPECT_EQ(mock_optimum_lr("NQ-Open"), 1e-5);
}

TEST(Oracle, MockResponsesParseForEveryFixturePair) {
  const std::pair<const char*, const char*> pairs[] = {
      {"coco", "detector"}, {"nq", "dpr"}, {"adult", "xgboost"}, {"new", "vit"}};
  MockBackend mock;
  for (const auto& [data, model] : pairs) {
    const auto prompt = fixture_prompt(data, model);
    const auto r = parse_response(mock.complete(prompt));
    EXPECT_EQ(r.predicted_log.entries.size(), static_cast<std::size_t>(kMockEpochs)) << data;
    EXPECT_TRUE(r.warnings.empty()) << data;
    EXPECT_EQ(architecture_estimates(r).count("fps"), 1u) << data;
    EXPECT_EQ(mock.complete(prompt), mock.complete(prompt));
  }
}

TEST(Oracle, MockReportsTheDefaultsOnAFirstPrompt) {
  const auto r = parse_response(mock_complete(fixture_prompt("coco", "detector").text));
  EXPECT_EQ(std::get<double>(r.hyperparameters.at("learning_rate")), 1e-4);
  EXPECT_NEAR(r.predicted_log.final_entry().val_metric, 0.7602, 1e-12);
}

TEST(Oracle, MockStepsTowardTheOptimumOnFollowups) {
  auto prompt = fixture_prompt("coco", "detector");
  const auto first = parse_response(mock_complete(prompt.text));
  prompt = compose_followup(prompt, first.predicted_log, UserRequest::note("maximize mAP"));
  const auto second = parse_response(mock_complete(prompt.text));
  EXPECT_NEAR(std::get<double>(second.hyperparameters.at("learning_rate")), std::pow(10.0, -4.25), 1e-18);
  EXPECT_GT(second.predicted_log.final_entry().val_metric, first.predicted_log.final_entry().val_metric);
}

TEST(Oracle, LearningRateKey) {
  EXPECT_EQ(learning_rate_key(automl::testing::fixture_model_card("detector").arch_hparams), "learning_rate");
  EXPECT_EQ(learning_rate_key(automl::testing::fixture_model_card("dpr").arch_hparams), "learning_rate");
  HyperParamSpace short_name;
  short_name.emplace("lr", HyperParamSpec{"lr", ParamKind::continuous_log, 1e-6, 1, {}, 1e-3, Flexibility::tunable});
  EXPECT_EQ(learning_rate_key(short_name), "lr");
  EXPECT_EQ(learning_rate_key(automl::testing::fixture_model_card("xgboost").arch_hparams), "");
}

TEST(OracleHttp, SuccessSendsPromptAndKey) {
  ScriptedServer server({200});
  HttpBackend backend(server.url(), "secret", 5);
  const auto prompt = fixture_prompt("nq", "dpr");
  EXPECT_EQ(backend.complete(prompt), kResponse);
  EXPECT_EQ(server.last_auth(), "Bearer secret");
  EXPECT_EQ(server.last_body(), prompt.text);
  EXPECT_EQ(backend.requests_used(), 1);
}

TEST(OracleHttp, AuthFailureIsNotRetried) {
  ScriptedServer server({401});
  HttpBackend backend(server.url(), "bad", 5);
  SleepLog sleeps;
  backend.set_backoff(std::chrono::milliseconds(1000), sleeps.sleeper());
  EXPECT_EQ(code_of([&] { backend.complete(fixture_prompt("nq", "dpr")); }), ErrorCode::AuthFailure);
  EXPECT_EQ(server.calls(), 1);
  EXPECT_TRUE(sleeps.delays.empty());
}

TEST(OracleHttp, TransientFailuresAreRetriedWithBackoff) {
  ScriptedServer server({503, 429, 200});
  HttpBackend backend(server.url(), "", 5);
  SleepLog sleeps;
  backend.set_backoff(std::chrono::milliseconds(1000), sleeps.sleeper());
  EXPECT_EQ(backend.complete(fixture_prompt("nq", "dpr")), kResponse);
  EXPECT_EQ(server.calls(), 3);
  EXPECT_EQ(sleeps.delays, (std::vector<long>{1000, 2000}));
}

TEST(OracleHttp, PersistentServerErrorsGiveUp) {
  ScriptedServer server({500});
  HttpBackend backend(server.url(), "", 5);
  SleepLog sleeps;
  backend.set_backoff(std::chrono::milliseconds(1), sleeps.sleeper());
  EXPECT_EQ(code_of([&] { backend.complete(fixture_prompt("nq", "dpr")); }), ErrorCode::BackendError);
  EXPECT_EQ(server.calls(), kHttpAttempts);
}

TEST(OracleHttp, ClientErrorsAreNotRetried) {
  ScriptedServer server({400});
  HttpBackend backend(server.url(), "", 5);
  EXPECT_EQ(code_of([&] { backend.complete(fixture_prompt("nq", "dpr")); }), ErrorCode::BackendError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(OracleHttp, UnreachableEndpoint) {
  HttpBackend backend("http://127.0.0.1:1/complete", "", 5);
  SleepLog sleeps;
  backend.set_backoff(std::chrono::milliseconds(1), sleeps.sleeper());
  EXPECT_EQ(code_of([&] { backend.complete(fixture_prompt("nq", "dpr")); }), ErrorCode::EndpointUnreachable);
  EXPECT_EQ(sleeps.delays.size(), static_cast<std::size_t>(kHttpAttempts - 1));
}

TEST(OracleHttp, BudgetIsEnforced) {
  ScriptedServer server({200});
  HttpBackend backend(server.url(), "", 2);
  const auto prompt = fixture_prompt("nq", "dpr");
  backend.complete(prompt);
  backend.complete(prompt);
  EXPECT_EQ(code_of([&] { backend.complete(prompt); }), ErrorCode::BudgetExceeded);
  EXPECT_EQ(server.calls(), 2);
  EXPECT_EQ(backend.requests_used(), 2);
}
