#pragma once

// HTTP facade over elicitation sessions.
//
//   POST /sessions                  create from plans + attribute schema
//   GET  /sessions/{id}             full session resource
//   GET  /sessions/{id}/frontier    surviving plans and active columns
//   GET  /sessions/{id}/question    pending question, 204 once decided
//   POST /sessions/{id}/answer      Answer JSON
//   POST /sessions/{id}/accept      close the session, return the report
//   GET  /healthz
//
// SessionStore::handle is transport-free so it can be driven directly;
// HttpServer binds it to cpp-httplib. Each session has its own mutex, so
// operations on one session are linearized while sessions proceed in
// parallel. The store keeps every session awaiting its next question, which
// keeps GET requests read-only.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lazyelicit/elicitation.hpp"
#include "lazyelicit/error.hpp"
#include "lazyelicit/io.hpp"

namespace lazyelicit::service {

using nlohmann::json;

struct Response {
  int status = 200;
  json body;
};

inline Response error_response(int status, std::string code, std::string message, json detail = nullptr) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}, {"detail", std::move(detail)}}};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> snapshot_dir = std::nullopt)
      : snapshot_dir_(std::move(snapshot_dir)) {
    if (snapshot_dir_) {
      std::filesystem::create_directories(*snapshot_dir_);
      load_snapshots();
    }
  }

  Response handle(const std::string& method, const std::string& path, const std::string& body) {
    std::vector<std::string> parts;
    for (std::size_t start = 1; start <= path.size();) {
      auto end = path.find('/', start);
      if (end == std::string::npos) end = path.size();
      if (end > start) parts.push_back(path.substr(start, end - start));
      start = end + 1;
    }
    if (parts.size() == 1 && parts[0] == "healthz" && method == "GET") {
      return {200, {{"status", "ok"}, {"sessions", size()}}};
    }
    if (parts.empty() || parts[0] != "sessions") return error_response(404, "not_found", "no such route");
    if (parts.size() == 1) {
      if (method == "POST") return create(body);
      return error_response(405, "method_not_allowed", method + " " + path);
    }
    const std::string& id = parts[1];
    const std::string leaf = parts.size() == 3 ? parts[2] : "";
    if (parts.size() > 3) return error_response(404, "not_found", "no such route");
    if (method == "GET" && leaf.empty()) return get(id);
    if (method == "GET" && leaf == "frontier") return frontier(id);
    if (method == "GET" && leaf == "question") return question(id);
    if (method == "POST" && leaf == "answer") return answer(id, body);
    if (method == "POST" && leaf == "accept") return accept(id);
    return error_response(404, "not_found", "no such route");
  }

  Response create(const std::string& body) {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception& e) {
      return error_response(400, "malformed_json", e.what());
    }
    try {
      auto entry = std::make_shared<Entry>(advance(ElicitationSession::start(problem_from_request(req))));
      entry->request = req;
      entry->created = entry->updated = utc_timestamp();
      const std::string id = new_id();
      entry->id = id;
      {
        std::unique_lock lock(map_mutex_);
        sessions_[id] = entry;
      }
      std::lock_guard lock(entry->mutex);
      snapshot(*entry);
      return {201, resource(*entry)};
    } catch (const Error& e) {
      return error_response(400, to_string(e.kind()), e.what());
    }
  }

  Response get(const std::string& id) {
    auto entry = find(id);
    if (!entry) return not_found(id);
    std::lock_guard lock(entry->mutex);
    return {200, resource(*entry)};
  }

  Response frontier(const std::string& id) {
    auto entry = find(id);
    if (!entry) return not_found(id);
    std::lock_guard lock(entry->mutex);
    const auto& s = entry->session;
    json plans = json::array();
    for (auto pid : s.frontier().surviving) {
      const auto& p = s.matrix().plan(pid);
      plans.push_back({{"id", p.id}, {"label", p.label}, {"w", p.w}});
    }
    json eliminated = json::array();
    for (const auto& e : s.eliminations()) eliminated.push_back(io::to_json(e));
    return {200,
            {{"id", id},
             {"frontier", s.frontier().surviving},
             {"size", s.frontier().surviving.size()},
             {"plans", plans},
             {"columns", io::columns_json(s.matrix(), s.problem().attributes)},
             {"eliminated", eliminated},
             {"decided", s.decided()}}};
  }

  Response question(const std::string& id) {
    auto entry = find(id);
    if (!entry) return not_found(id);
    std::lock_guard lock(entry->mutex);
    const auto& s = entry->session;
    if (!s.pending()) return {204, nullptr};
    return {200, io::to_json(*s.pending(), s.problem(), s.matrix())};
  }

  Response answer(const std::string& id, const std::string& body) {
    auto entry = find(id);
    if (!entry) return not_found(id);
    Answer a;
    try {
      a = io::answer_from_json(json::parse(body));
    } catch (const json::exception& e) {
      return error_response(400, "malformed_json", e.what());
    } catch (const Error& e) {
      return error_response(400, to_string(e.kind()), e.what());
    }
    std::lock_guard lock(entry->mutex);
    try {
      entry->session = advance(entry->session.apply_answer(a));
    } catch (const Error& e) {
      const int status = e.kind() == ErrorKind::invalid_state ? 409 : 422;
      return error_response(status, to_string(e.kind()), e.what());
    }
    entry->updated = utc_timestamp();
    snapshot(*entry);
    return {200, resource(*entry)};
  }

  Response accept(const std::string& id) {
    auto entry = find(id);
    if (!entry) return not_found(id);
    std::lock_guard lock(entry->mutex);
    const auto report = entry->session.accept();
    entry->session = entry->session.close();
    entry->closed = true;
    entry->updated = utc_timestamp();
    snapshot(*entry);
    json out = resource(*entry);
    out["report"] = io::to_json(report, entry->session.problem().attributes);
    return {200, out};
  }

  std::size_t size() const {
    std::shared_lock lock(map_mutex_);
    return sessions_.size();
  }

  /// Committed snapshot of one session, for tests and tooling.
  std::optional<ElicitationSession> session(const std::string& id) const {
    auto entry = find(id);
    if (!entry) return std::nullopt;
    std::lock_guard lock(entry->mutex);
    return entry->session;
  }

  /// Parses a create-session body: {plans | plans_csv, attributes, epsilon}.
  static Problem problem_from_request(const json& req) {
    if (!req.is_object()) throw Error(ErrorKind::invalid_argument, "request body must be an object");
    if (!req.contains("attributes")) throw Error(ErrorKind::invalid_argument, "missing 'attributes'");
    auto schema = io::schema_from_json(req.at("attributes"));
    double epsilon = 0.0;
    if (req.contains("epsilon")) {
      if (!req.at("epsilon").is_number()) throw Error(ErrorKind::invalid_argument, "epsilon must be a number");
      epsilon = req.at("epsilon").get<double>();
    }
    PlanMatrix plans;
    const json* csv = req.contains("plans_csv") ? &req.at("plans_csv")
                      : req.contains("plans") && req.at("plans").is_string() ? &req.at("plans")
                                                                            : nullptr;
    if (csv) {
      std::istringstream in(csv->get<std::string>());
      plans = io::read_plan_csv(in);
    } else if (req.contains("plans")) {
      plans = io::plans_from_json(req.at("plans"), schema);
    } else {
      throw Error(ErrorKind::invalid_argument, "missing 'plans' or 'plans_csv'");
    }
    return io::make_problem(std::move(plans), std::move(schema), epsilon);
  }

 private:
  struct Entry {
    explicit Entry(ElicitationSession s) : session(std::move(s)) {}

    std::mutex mutex;
    std::string id;
    ElicitationSession session;
    bool closed = false;
    json request;
    std::string created;
    std::string updated;
  };

  /// Puts the next question in place so reads never have to create one.
  static ElicitationSession advance(ElicitationSession s) {
    if (s.status() == SessionStatus::active && !s.decided()) return s.next_question().first;
    return s;
  }

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  static Response not_found(const std::string& id) {
    return error_response(404, "not_found", "unknown session '" + id + "'");
  }

  static json resource(const Entry& e) {
    return {{"id", e.id}, {"created", e.created}, {"updated", e.updated}, {"session", io::to_json(e.session)}};
  }

  std::string new_id() {
    std::lock_guard lock(id_mutex_);
    std::uniform_int_distribution<std::uint64_t> dist;
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(dist(id_rng_)),
                  static_cast<unsigned long long>(dist(id_rng_)));
    return buf;
  }

  void snapshot(const Entry& e) const {
    if (!snapshot_dir_) return;
    json answers = json::array();
    for (const auto& a : e.session.answers()) answers.push_back(io::to_json(a));
    json doc = {{"id", e.id},
                {"created", e.created},
                {"updated", e.updated},
                {"request", e.request},
                {"answers", answers},
                {"closed", e.closed}};
    const auto path = *snapshot_dir_ / (e.id + ".json");
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
  }

  void load_snapshots() {
    for (const auto& file : std::filesystem::directory_iterator(*snapshot_dir_)) {
      if (file.path().extension() != ".json") continue;
      const json doc = io::read_json_file(file.path().string());
      const auto answers = io::answers_from_json(doc.at("answers"));
      auto s = ElicitationSession::replay(problem_from_request(doc.at("request")), answers);
      auto entry = std::make_shared<Entry>(doc.value("closed", false) ? s.close() : advance(std::move(s)));
      entry->closed = doc.value("closed", false);
      entry->id = doc.at("id").get<std::string>();
      entry->request = doc.at("request");
      entry->created = doc.at("created").get<std::string>();
      entry->updated = doc.at("updated").get<std::string>();
      sessions_[entry->id] = entry;
    }
  }

  std::optional<std::filesystem::path> snapshot_dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex id_mutex_;
  std::mt19937_64 id_rng_{std::random_device{}()};
};

/// cpp-httplib binding for SessionStore.
class HttpServer {
 public:
  explicit HttpServer(SessionStore& store) : store_(store) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const Response r = store_.handle(req.method, req.path, req.body);
      res.status = r.status;
      if (r.status != 204) res.set_content(r.body.dump(), "application/json");
    };
    server_.Get(R"(/.*)", route);
    server_.Post(R"(/.*)", route);
  }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port and returns it; call listen_after_bind next.
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  SessionStore& store_;
  httplib::Server server_;
};

}  // namespace lazyelicit::service
