#include "sensitest/path_io.hpp"
#include "sensitest/service.hpp"

#include "httplib.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <thread>

using namespace sensitest;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("sensitest_service_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    store_ = std::make_unique<SessionStore>(dir_);
    register_routes(server_, *store_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    worker_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_.stop();
    worker_.join();
    std::filesystem::remove_all(dir_);
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::string create(const json& body) {
    auto res = post("/sessions", body);
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body)["id"];
  }

  std::filesystem::path dir_;
  std::unique_ptr<SessionStore> store_;
  httplib::Server server_;
  int port_ = 0;
  std::thread worker_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(ServiceTest, CreateReturnsFirstLevel) {
  auto res = post("/sessions", {{"design", "bruceton"}, {"x1", 2.0}, {"d", 0.25}});
  ASSERT_EQ(res->status, 201);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body["next_level"], 2.0);
  EXPECT_EQ(body["status"], "active");

  res = post("/sessions", {{"rule", {{"design", "langlie"}, {"a", 0}, {"b", 1}, {"eps", 0.1}}}, {"link", "probit"}});
  ASSERT_EQ(res->status, 201);
  EXPECT_EQ(json::parse(res->body)["next_level"], 0.5);
}

TEST_F(ServiceTest, InvalidRuleIs422WithField) {
  auto res = post("/sessions", {{"design", "langlie"}, {"a", 0}, {"b", 1}, {"eps", 0.6}});
  ASSERT_EQ(res->status, 422);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body["field"], "eps");
  EXPECT_TRUE(body.contains("code"));
  EXPECT_TRUE(body.contains("message"));
}

TEST_F(ServiceTest, MalformedJsonIs400) {
  auto res = client_->Post("/sessions", "{nope", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, OutcomeFlow) {
  const auto id = create({{"design", "bruceton"}, {"x1", 2.0}, {"d", 0.25}});
  auto res = post("/sessions/" + id + "/outcomes", {{"y", 1}, {"trial_index", 1}});
  ASSERT_EQ(res->status, 200);
  auto body = json::parse(res->body);
  EXPECT_EQ(body["next_level"], 1.75);
  EXPECT_EQ(body["recorded_trial_index"], 1);
  EXPECT_EQ(body["trial_index"], 2);

  res = post("/sessions/" + id + "/outcomes", {{"y", 0}, {"trial_index", 1}});
  EXPECT_EQ(res->status, 409);
  res = post("/sessions/" + id + "/outcomes", {{"y", 3}});
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body)["field"], "y");
  res = post("/sessions/zzz/outcomes", {{"y", 1}});
  EXPECT_EQ(res->status, 404);

  res = client_->Get("/sessions/" + id);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["trials"].size(), 1u);
}

TEST_F(ServiceTest, EstimateReportsNotEstimable) {
  const auto id = create({{"design", "bruceton"}, {"x1", 0.0}, {"d", 1.0}});
  post("/sessions/" + id + "/outcomes", {{"y", 1}});
  auto res = client_->Get("/sessions/" + id + "/estimate?q=0.5&level=0.95");
  ASSERT_EQ(res->status, 200);
  auto body = json::parse(res->body);
  EXPECT_EQ(body["status"], "NOT_ESTIMABLE");
  EXPECT_EQ(body["reason"], "too_few");
  res = client_->Get("/sessions/" + id + "/estimate?q=abc");
  EXPECT_EQ(res->status, 422);
  res = client_->Get("/sessions/missing/estimate");
  EXPECT_EQ(res->status, 404);
}

TEST_F(ServiceTest, ExportRefitAndReplay) {
  const auto id = create({{"design", "langlie"}, {"a", -2}, {"b", 2}, {"eps", 0.3}});
  Rng rng({21, 0});
  double level = 0;
  for (int k = 1; k <= 200; ++k) {
    const int y = rng.uniform() < link_eval(Link::logit, level).H ? 1 : 0;
    auto res = post("/sessions/" + id + "/outcomes", {{"y", y}, {"trial_index", k}});
    ASSERT_EQ(res->status, 200);
    level = json::parse(res->body)["next_level"];
  }
  auto res = client_->Get("/sessions/" + id + "/export");
  ASSERT_EQ(res->status, 200);
  std::istringstream csv(res->body);
  const auto path = read_path_csv(csv);
  EXPECT_TRUE(replays_exactly(path));
  EXPECT_EQ(next_level(path), level);
  const auto estimate = json::parse(client_->Get("/sessions/" + id + "/estimate")->body);
  ASSERT_EQ(estimate["status"], "ESTIMABLE");
  EXPECT_EQ(vec2_from_json(estimate["estimate"]["theta_hat"]), fit_mle(path, Link::logit).theta_hat);
}

TEST_F(ServiceTest, CloseBlocksFurtherOutcomes) {
  const auto id = create({{"design", "robbins-monro"}, {"x1", 1.0}, {"c", 1.0}, {"q", 0.5}});
  auto res = post("/sessions/" + id + "/close", json::object());
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "closed");
  res = post("/sessions/" + id + "/outcomes", {{"y", 1}});
  EXPECT_EQ(res->status, 409);
}

TEST(ServiceConfig, ReadsEnvironment) {
  ::setenv("SENSITEST_LISTEN", "0.0.0.0:9123", 1);
  ::setenv("SENSITEST_DATA_DIR", "/tmp/sensitest_env", 1);
  const auto c = service_config_from_env();
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9123);
  EXPECT_EQ(c.data_dir, "/tmp/sensitest_env");
  ::unsetenv("SENSITEST_LISTEN");
  ::unsetenv("SENSITEST_DATA_DIR");
}
