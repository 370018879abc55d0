#include "gmrs/service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <optional>
#include <random>
#include <thread>

using namespace gmrs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("gmrs-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Json create_body(int n_init, int n_max, const char* surrogate = "rbf") {
  return Json{{"problem", {{"lower", {-2.0, -1.0}}, {"upper", {2.0, 1.0}}, {"labels", {"a", "b"}}}},
              {"config", {{"n_init", n_init}, {"n_max", n_max}, {"seed", 3}, {"surrogate", surrogate}}}};
}

// The noiseless decision-maker for a latent cost.
std::string answer_for(const Json& q) {
  auto f = [](const Json& v) { return std::pow(v[0].get<double>() - 0.5, 2) + v[1].get<double>(); };
  const double l = f(q["left"]), r = f(q["right"]);
  return l < r ? "left" : "right";
}

std::optional<ErrorCode> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("initial chain query counts") {
  TempDir dir;
  SessionService svc(dir.path);
  Json q = svc.create(create_body(8, 12));
  int initial = 0;
  while (q["status"] == "pending" && q["phase"] == "initial") {
    ++initial;
    q = svc.submit(q["id"], {{"answer", answer_for(q)}, {"token", q["token"]}});
  }
  CHECK(initial == 7);

  q = svc.create(create_body(2, 4));
  CHECK(q["phase"] == "initial");
  q = svc.submit(q["id"], {{"answer", "right"}});
  CHECK(q["phase"] == "loop");
}

TEST_CASE("malformed problems are rejected") {
  TempDir dir;
  SessionService svc(dir.path);
  auto body = create_body(4, 8);
  body["problem"]["lower"] = {3.0, 0.0};
  CHECK(code_of([&] { svc.create(body); }) == ErrorCode::validation);
  body = create_body(4, 8);
  body["problem"]["labels"] = {"only-one"};
  CHECK(code_of([&] { svc.create(body); }) == ErrorCode::validation);
  body = create_body(4, 8);
  body["config"]["mode"] = "blackbox";
  CHECK(code_of([&] { svc.create(body); }) == ErrorCode::validation);
  CHECK(code_of([&] { svc.create(Json{{"x", 1}}); }) == ErrorCode::validation);
  CHECK(http_status(ErrorCode::validation) == 422);
  CHECK(svc.ids().empty());
}

TEST_CASE("answers drive the incumbent and the budget") {
  TempDir dir;
  SessionService svc(dir.path);
  Json q = svc.create(create_body(2, 5));
  const std::string id = q["id"];
  const Json left = q["left"];
  q = svc.submit(id, {{"answer", "left"}});
  CHECK(svc.best(id)["x"] == left);
  CHECK(q["right"] == left);

  const Json keep = q["right"];
  q = svc.submit(id, {{"answer", "right"}});
  CHECK(svc.best(id)["x"] == keep);
  q = svc.submit(id, {{"answer", "tie"}});
  CHECK(svc.best(id)["x"] == keep);
  q = svc.submit(id, {{"answer", "right"}});
  CHECK(q["status"] == "finished");
  CHECK(q["best"] == keep);
  CHECK(code_of([&] { svc.submit(id, {{"answer", "left"}}); }) == ErrorCode::conflict);

  const Json h = svc.history(id);
  CHECK(h["entries"].size() == 4);
  CHECK(h["entries"][0]["phase"] == "initial");
  CHECK(h["entries"][2]["answer"] == "tie");
  CHECK(h["entries"][2]["preference"] == 0);
  CHECK(svc.best(id)["samples"] == 5);
}

TEST_CASE("ties under a GP surrogate are unsupported") {
  TempDir dir;
  SessionService svc(dir.path);
  Json q = svc.create(create_body(2, 5, "gp"));
  CHECK(code_of([&] { svc.submit(q["id"], {{"answer", "tie"}}); }) == ErrorCode::unsupported);
  CHECK(http_status(ErrorCode::unsupported) == 422);
  CHECK(svc.query(q["id"])["token"] == q["token"]);
  CHECK(code_of([&] { svc.submit(q["id"], {{"answer", "maybe"}}); }) == ErrorCode::validation);
}

TEST_CASE("stale tokens conflict") {
  TempDir dir;
  SessionService svc(dir.path);
  Json q = svc.create(create_body(4, 8));
  const auto token = q["token"];
  q = svc.submit(q["id"], {{"answer", "left"}, {"token", token}});
  CHECK(code_of([&] { svc.submit(q["id"], {{"answer", "left"}, {"token", token}}); }) ==
        ErrorCode::conflict);
  CHECK(http_status(ErrorCode::conflict) == 409);
}

TEST_CASE("concurrent submits with one token: exactly one wins") {
  TempDir dir;
  SessionService svc(dir.path);
  Json q = svc.create(create_body(4, 10));
  const std::string id = q["id"];
  const Json body{{"answer", "left"}, {"token", q["token"]}};
  std::atomic<int> ok{0}, conflicts{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      try {
        svc.submit(id, body);
        ++ok;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::conflict) ++conflicts;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflicts == 7);
  CHECK(svc.history(id)["entries"].size() == 1);
}

TEST_CASE("sessions survive a restart") {
  TempDir dir;
  std::string id;
  Json pending;
  {
    SessionService svc(dir.path);
    Json q = svc.create(create_body(4, 9));
    id = q["id"];
    for (int i = 0; i < 5; ++i) q = svc.submit(id, {{"answer", answer_for(q)}});
    pending = q;
  }
  SessionService again(dir.path);
  REQUIRE(again.ids().size() == 1);
  const Json q = again.query(id);
  CHECK(q["token"] == pending["token"]);
  CHECK(q["left"] == pending["left"]);
  CHECK(again.history(id)["entries"].size() == 5);

  // A record without a pending query (proposal interrupted after the answer
  // was stored) resumes with a fresh proposal.
  SessionStore store(dir.path);
  SessionRecord r = store.load(id);
  r.state.pending.reset();
  store.save(r);
  SessionService third(dir.path);
  const Json resumed = third.query(id);
  CHECK(resumed["status"] == "pending");
  CHECK(resumed["phase"] == "loop");
  CHECK(third.history(id)["entries"].size() == 5);
  CHECK_FALSE(fs::exists(store.path_for(id).string() + ".tmp"));
}

TEST_CASE("deleted sessions are gone") {
  TempDir dir;
  SessionService svc(dir.path);
  const std::string id = svc.create(create_body(4, 8))["id"];
  svc.remove(id);
  CHECK(code_of([&] { svc.query(id); }) == ErrorCode::not_found);
  CHECK(code_of([&] { svc.remove(id); }) == ErrorCode::not_found);
  CHECK(http_status(ErrorCode::not_found) == 404);
  CHECK(SessionService(dir.path).ids().empty());
}

TEST_CASE("http endpoints") {
  TempDir dir;
  SessionService svc(dir.path);
  httplib::Server server;
  register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto res = client.Post("/sessions", create_body(2, 4).dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  Json q = Json::parse(res->body);
  const std::string id = q["id"];

  res = client.Get("/sessions/" + id + "/query");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["token"] == q["token"]);

  res = client.Post("/sessions/" + id + "/preference",
                    Json{{"answer", "left"}, {"token", q["token"]}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  res = client.Post("/sessions/" + id + "/preference",
                    Json{{"answer", "left"}, {"token", q["token"]}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);
  CHECK(Json::parse(res->body)["code"] == "conflict");

  res = client.Post("/sessions/" + id + "/preference", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);

  res = client.Post("/sessions", R"({"problem": {"lower": [1], "upper": [0]}})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);

  res = client.Get("/sessions/" + id + "/history");
  REQUIRE(res);
  CHECK(Json::parse(res->body)["entries"].size() == 1);
  res = client.Get("/sessions/" + id + "/best");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Options("/sessions");
  REQUIRE(res);
  CHECK(res->status == 204);

  res = client.Delete("/sessions/" + id);
  REQUIRE(res);
  CHECK(res->status == 204);
  res = client.Get("/sessions/" + id + "/query");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = client.Get("/sessions/..%2Fescape/query");
  REQUIRE(res);
  CHECK(res->status == 404);

  server.stop();
  worker.join();
}
