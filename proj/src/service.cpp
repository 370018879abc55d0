#include "gmrs/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fcntl.h>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

namespace gmrs {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx",
                static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  }
  return true;
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io, "write failed for " + path.string());
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

const char* answer_name(int b) {
  return b < 0 ? "left" : (b > 0 ? "right" : "tie");
}

}  // namespace

// ---------------------------------------------------------------------------

Json to_json(const ProblemDescriptor& p) {
  return Json{{"lower", to_json(p.lower)},
              {"upper", to_json(p.upper)},
              {"labels", p.labels},
              {"metadata", p.metadata}};
}

ProblemDescriptor problem_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "problem must be an object");
  ProblemDescriptor p;
  if (!j.contains("lower") || !j.contains("upper")) {
    throw Error(ErrorCode::validation, "problem needs lower and upper bounds");
  }
  p.lower = vec_from_json(j["lower"]);
  p.upper = vec_from_json(j["upper"]);
  try {
    ConstraintSet check(p.lower, p.upper);
  } catch (const Error& e) {
    throw Error(ErrorCode::validation, e.what());
  }
  if (j.contains("labels")) {
    try {
      p.labels = j["labels"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::validation, "labels must be strings");
    }
    if (p.labels.size() != static_cast<std::size_t>(p.lower.size())) {
      throw Error(ErrorCode::validation, "one label per coordinate is required");
    }
  } else {
    for (Eigen::Index d = 1; d <= p.lower.size(); ++d) p.labels.push_back("x" + std::to_string(d));
  }
  if (j.contains("metadata")) p.metadata = j["metadata"];
  return p;
}

Json to_json(const SessionRecord& r) {
  return Json{{"id", r.id},
              {"created", r.created},
              {"updated", r.updated},
              {"problem", to_json(r.problem)},
              {"config", to_json(r.config)},
              {"state", to_json(r.state)}};
}

SessionRecord session_record_from_json(const Json& j) {
  try {
    ProblemDescriptor problem = problem_from_json(j.at("problem"));
    GmrsConfig cfg = config_from_json(j.at("config"));
    SessionState state =
        session_state_from_json(j.at("state"), cfg.mode, problem.upper - problem.lower);
    return SessionRecord{j.at("id").get<std::string>(), std::move(problem), std::move(cfg),
                         std::move(state), j.at("created").get<std::string>(),
                         j.at("updated").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("malformed session record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir_.string() + ": " + ec.message());
}

fs::path SessionStore::path_for(const std::string& id) const {
  return dir_ / (id + ".json");
}

void SessionStore::save(const SessionRecord& record) const {
  const fs::path target = path_for(record.id);
  const fs::path tmp = dir_ / (record.id + ".json.tmp");
  const std::string data = to_json(record).dump(1);

  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::io, "cannot open " + tmp.string());
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) throw Error(ErrorCode::io, "fsync failed for " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), target.c_str()) != 0) {
    throw Error(ErrorCode::io, "cannot rename " + tmp.string());
  }
  const int dfd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

SessionRecord SessionStore::load(const std::string& id) const {
  std::ifstream in(path_for(id), std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, "corrupt session file for '" + id + "': " + e.what());
  }
  return session_record_from_json(j);
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SessionStore::remove(const std::string& id) const {
  std::error_code ec;
  fs::remove(path_for(id), ec);
  if (ec) throw Error(ErrorCode::io, "cannot remove session '" + id + "'");
}

// ---------------------------------------------------------------------------

SessionService::SessionService(fs::path dir) : store_(std::move(dir)) {
  for (const auto& id : store_.list()) {
    auto entry = std::make_shared<Entry>();
    entry->record = std::make_unique<SessionRecord>(store_.load(id));
    sessions_.emplace(id, std::move(entry));
  }
}

std::vector<std::string> SessionService::ids() const {
  std::lock_guard lock(registry_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
  std::lock_guard lock(registry_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  return it->second;
}

void SessionService::touch_and_save(SessionRecord& r) const {
  r.updated = utc_now();
  store_.save(r);
}

Json SessionService::query_view(const SessionRecord& r) const {
  const SessionState& s = r.state;
  const PendingQuery& q = *s.pending;
  Json j;
  j["status"] = "pending";
  j["token"] = q.token;
  j["phase"] = to_string(q.phase);
  j["query_number"] = s.history.size() + 1;
  j["iteration"] = q.phase == Phase::loop ? s.iteration + 1 : 0;
  j["remaining"] = r.config.n_max - s.dataset.size() +
                   (q.phase == Phase::initial ? s.dataset.size() - s.init_cursor : 0);
  j["left"] = to_json(q.candidate);
  j["right"] = to_json(s.dataset.sample(q.incumbent));
  j["labels"] = r.problem.labels;
  j["delta"] = q.delta ? Json(*q.delta) : Json(nullptr);
  return j;
}

Json SessionService::history_view(const SessionRecord& r) const {
  Json entries = Json::array();
  for (std::size_t i = 0; i < r.state.history.size(); ++i) {
    const StepRecord& h = r.state.history[i];
    const int b = static_cast<int>(h.value);
    entries.push_back({{"index", i + 1},
                       {"phase", to_string(h.phase)},
                       {"iteration", h.iter},
                       {"left", to_json(h.x)},
                       {"right", to_json(h.incumbent)},
                       {"answer", answer_name(b)},
                       {"preference", b},
                       {"delta", h.delta ? Json(*h.delta) : Json(nullptr)},
                       {"improved", h.improved}});
  }
  return entries;
}

Json SessionService::finished_view(const SessionRecord& r) const {
  return Json{{"status", "finished"},
              {"best", to_json(r.state.x_best())},
              {"labels", r.problem.labels},
              {"history", history_view(r)}};
}

Json SessionService::create(const Json& body) {
  if (!body.is_object() || !body.contains("problem")) {
    throw Error(ErrorCode::validation, "body needs a problem descriptor");
  }
  ProblemDescriptor problem = problem_from_json(body["problem"]);
  Json cfg_json = body.value("config", Json::object());
  if (!cfg_json.is_object()) throw Error(ErrorCode::validation, "config must be an object");
  if (cfg_json.contains("mode") && cfg_json["mode"] != "preference") {
    throw Error(ErrorCode::validation, "interactive sessions are preference-based");
  }
  cfg_json["mode"] = "preference";
  if (!cfg_json.contains("seed")) cfg_json["seed"] = std::random_device{}();
  GmrsConfig cfg = config_from_json(cfg_json);

  const ConstraintSet box = problem.box();
  SessionState state = initialize_session(cfg, box);
  next_query(state, cfg, box);

  auto entry = std::make_shared<Entry>();
  const std::string now = utc_now();
  entry->record = std::make_unique<SessionRecord>(
      SessionRecord{new_session_id(), std::move(problem), std::move(cfg), std::move(state),
                    now, now});
  store_.save(*entry->record);
  Json out = query_view(*entry->record);
  out["id"] = entry->record->id;
  {
    std::lock_guard lock(registry_mutex_);
    sessions_.emplace(entry->record->id, entry);
  }
  return out;
}

Json SessionService::query(const std::string& id) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->record) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  SessionRecord& r = *entry->record;
  if (!r.state.pending && r.state.phase != Phase::finished) {
    // A proposal failed after the last answer was stored; retry it.
    SessionState next = r.state;
    next_query(next, r.config, r.problem.box());
    SessionRecord updated = r;
    updated.state = std::move(next);
    touch_and_save(updated);
    r = std::move(updated);
  }
  Json out = r.state.pending ? query_view(r) : finished_view(r);
  out["id"] = id;
  return out;
}

Json SessionService::submit(const std::string& id, const Json& body) {
  if (!body.is_object() || !body.contains("answer") || !body["answer"].is_string()) {
    throw Error(ErrorCode::validation, "body needs answer: left, right or tie");
  }
  const std::string answer = body["answer"].get<std::string>();
  int b;
  if (answer == "left") {
    b = -1;
  } else if (answer == "right") {
    b = 1;
  } else if (answer == "tie") {
    b = 0;
  } else {
    throw Error(ErrorCode::validation, "answer must be left, right or tie");
  }

  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->record) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  SessionRecord& r = *entry->record;
  if (!r.state.pending) {
    throw Error(ErrorCode::conflict, r.state.phase == Phase::finished
                                         ? "the session is finished"
                                         : "no query is pending");
  }
  if (body.contains("token")) {
    if (!body["token"].is_number_unsigned() ||
        body["token"].get<std::uint64_t>() != r.state.pending->token) {
      throw Error(ErrorCode::conflict, "stale query token");
    }
  }
  if (b == 0 && r.config.surrogate == SurrogateKind::gp) {
    throw Error(ErrorCode::unsupported,
                "ties cannot be recorded with a GP surrogate; pick left or right");
  }

  const ConstraintSet box = r.problem.box();
  SessionRecord updated = r;
  answer_query(updated.state, updated.config, box, b);
  touch_and_save(updated);
  r = updated;

  std::optional<PendingQuery> next = next_query(updated.state, updated.config, box);
  if (next) {
    touch_and_save(updated);
    r = std::move(updated);
  }
  Json out = r.state.pending ? query_view(r) : finished_view(r);
  out["id"] = id;
  return out;
}

Json SessionService::history(const std::string& id) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->record) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  const SessionRecord& r = *entry->record;
  return Json{{"id", id},
              {"status", to_string(r.state.phase)},
              {"labels", r.problem.labels},
              {"entries", history_view(r)}};
}

Json SessionService::best(const std::string& id) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->record) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  const SessionRecord& r = *entry->record;
  return Json{{"id", id},
              {"status", to_string(r.state.phase)},
              {"x", to_json(r.state.x_best())},
              {"labels", r.problem.labels},
              {"samples", r.state.dataset.size()},
              {"n_max", r.config.n_max}};
}

void SessionService::remove(const std::string& id) {
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(registry_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'");
    entry = it->second;
    sessions_.erase(it);
  }
  std::lock_guard lock(entry->mutex);
  entry->record.reset();
  store_.remove(id);
}

// ---------------------------------------------------------------------------

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::validation:
    case ErrorCode::invalid_argument:
    case ErrorCode::unsupported: return 422;
    default: return 500;
  }
}

namespace {

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const Error& e) {
    send(res, http_status(e.code()), Json{{"code", to_string(e.code())}, {"message", e.what()}});
  } catch (const std::exception& e) {
    send(res, 500, Json{{"code", "internal"}, {"message", e.what()}});
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("body is not valid JSON: ") + e.what());
  }
}

std::string id_param(const httplib::Request& req) {
  std::string id = req.matches[1];
  if (!valid_id(id)) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  return id;
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 201, service.create(parse_body(req))); });
  });
  server.Get(R"(/sessions/([^/]+)/query)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { send(res, 200, service.query(id_param(req))); });
             });
  server.Post(R"(/sessions/([^/]+)/preference)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  send(res, 200, service.submit(id_param(req), parse_body(req)));
                });
              });
  server.Get(R"(/sessions/([^/]+)/history)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { send(res, 200, service.history(id_param(req))); });
             });
  server.Get(R"(/sessions/([^/]+)/best)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { send(res, 200, service.best(id_param(req))); });
             });
  server.Delete(R"(/sessions/([^/]+))",
                [&](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    service.remove(id_param(req));
                    res.status = 204;
                  });
                });
}

}  // namespace gmrs
