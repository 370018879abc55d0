#pragma once

// Interactive preference sessions: a human answers pairwise queries
// (candidate vs. current best) over HTTP while the optimizer advances.
// Every accepted answer is written to disk before it is acknowledged.

#include "gmrs/driver.hpp"
#include "gmrs/serialize.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace gmrs {

struct ProblemDescriptor {
  Vec lower;
  Vec upper;
  std::vector<std::string> labels;  // one per coordinate
  Json metadata = Json::object();   // opaque display hints

  ConstraintSet box() const { return ConstraintSet(lower, upper); }
};

Json to_json(const ProblemDescriptor& p);
ProblemDescriptor problem_from_json(const Json& j);

struct SessionRecord {
  std::string id;
  ProblemDescriptor problem;
  GmrsConfig config;
  SessionState state;
  std::string created;
  std::string updated;
};

Json to_json(const SessionRecord& r);
SessionRecord session_record_from_json(const Json& j);

/// One JSON document per session in a directory.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  /// Write to a temporary file, flush it to disk, then rename over the
  /// previous document.
  void save(const SessionRecord& record) const;
  SessionRecord load(const std::string& id) const;
  std::vector<std::string> list() const;
  void remove(const std::string& id) const;
  std::filesystem::path path_for(const std::string& id) const;

 private:
  std::filesystem::path dir_;
};

/// Session logic behind the HTTP endpoints. Methods take and return JSON
/// payloads and throw Error on failure (see http_status).
class SessionService {
 public:
  explicit SessionService(std::filesystem::path dir);

  /// Body {problem: {lower, upper, labels?, metadata?}, config?: {...}}.
  Json create(const Json& body);
  Json query(const std::string& id);
  /// Body {answer: "left"|"right"|"tie", token?: n}. left prefers the
  /// candidate, right the incumbent best.
  Json submit(const std::string& id, const Json& body);
  Json history(const std::string& id);
  Json best(const std::string& id);
  void remove(const std::string& id);

  std::vector<std::string> ids() const;

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<SessionRecord> record;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  Json query_view(const SessionRecord& r) const;
  Json finished_view(const SessionRecord& r) const;
  Json history_view(const SessionRecord& r) const;
  void touch_and_save(SessionRecord& r) const;

  SessionStore store_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;

/// Routes: POST /sessions, GET /sessions/{id}/query,
/// POST /sessions/{id}/preference, GET /sessions/{id}/history,
/// GET /sessions/{id}/best, DELETE /sessions/{id}. Errors are returned as
/// {code, message}.
void register_routes(httplib::Server& server, SessionService& service);

}  // namespace gmrs
