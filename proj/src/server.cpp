#include "adgen/server.hpp"

#include "adgen/errors.hpp"
#include "adgen/image_io.hpp"

#include <httplib.h>

#include <map>

namespace adgen {

namespace fs = std::filesystem;
using nlohmann::json;

json candidate_cards(const json &m) {
  std::map<std::string, json> variants, reports;
  for (const auto &v : m.value("variants", json::array()))
    variants[v.at("variant_id").get<std::string>()] = v;
  for (const auto &r : m.value("quality_reports", json::array()))
    reports[r.at("candidate_id").get<std::string>()] = r;
  const auto selected = m.value("selected", json::array());
  const auto human = m.value("human_selection", json());

  json gated = json::array(), rest = json::array();
  for (const auto &c : m.value("candidates", json::array())) {
    const auto id = c.at("candidate_id").get<std::string>();
    json card = {{"candidate_id", id},
                 {"variant_id", c.at("variant_id")},
                 {"image_url", "/api/images/" + c.at("image").get<std::string>() + ".png"},
                 {"seed", c.at("seed")},
                 {"attempt", c.at("attempt")}};
    if (auto v = variants.find(c.at("variant_id").get<std::string>()); v != variants.end()) {
      card["slot"] = v->second.at("slot");
      card["rotation_deg"] = v->second.at("rotation_deg");
      card["scale"] = v->second.at("scale");
      card["placed_bbox"] = v->second.at("placed_bbox");
    }
    if (auto r = reports.find(id); r != reports.end()) {
      for (const char *key : {"rubric", "gate", "matched_pattern", "aesthetic", "clip_score", "combined", "flags"})
        card[key] = r->second.at(key);
    }
    auto rank = std::find(selected.begin(), selected.end(), json(id));
    card["selected"] = rank != selected.end();
    card["rank"] = rank != selected.end() ? json(rank - selected.begin() + 1) : json();
    card["human_selected"] = human.is_array() && std::find(human.begin(), human.end(), json(id)) != human.end();
    (rank != selected.end() ? gated : rest).push_back(std::move(card));
  }
  std::sort(gated.begin(), gated.end(),
            [](const json &a, const json &b) { return a["rank"].get<int>() < b["rank"].get<int>(); });
  std::stable_sort(rest.begin(), rest.end(), [](const json &a, const json &b) {
    const double ca = a.value("combined", 0.0), cb = b.value("combined", 0.0);
    if (ca != cb)
      return ca > cb;
    return a["candidate_id"].get<std::string>() < b["candidate_id"].get<std::string>();
  });
  for (auto &c : rest)
    gated.push_back(std::move(c));
  return gated;
}

struct ApiServer::Impl {
  std::shared_ptr<RunRepository> runs;
  httplib::Server http;
};

namespace {

void send_json(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response &res, int status, const std::string &message) {
  send_json(res, {{"error", message}}, status);
}

} // namespace

ApiServer::ApiServer(std::shared_ptr<RunRepository> runs, fs::path static_dir) : impl_(std::make_unique<Impl>()) {
  if (!runs)
    throw InputError("ApiServer needs a run repository");
  impl_->runs = std::move(runs);
  auto &srv = impl_->http;
  auto &repo = *impl_->runs;
  // httplib enables SO_REUSEPORT by default, which lets a second server bind a busy port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char *>(&yes), sizeof yes);
  });

  srv.Get("/api/runs", [&repo](const httplib::Request &, httplib::Response &res) {
    send_json(res, repo.list_summaries());
  });

  srv.Get(R"(/api/runs/([^/]+))", [&repo](const httplib::Request &req, httplib::Response &res) {
    try {
      send_json(res, repo.load(req.matches[1]));
    } catch (const InputError &e) {
      send_error(res, 404, e.what());
    }
  });

  srv.Get(R"(/api/runs/([^/]+)/candidates)", [&repo](const httplib::Request &req, httplib::Response &res) {
    try {
      const auto m = repo.load(req.matches[1]);
      send_json(res, {{"run_id", m.value("run_id", "")},
                      {"status", m.value("status", "")},
                      {"matched_pattern", m.value("matched_pattern", json())},
                      {"human_selection", m.value("human_selection", json())},
                      {"candidates", candidate_cards(m)}});
    } catch (const InputError &e) {
      send_error(res, 404, e.what());
    }
  });

  srv.Get(R"(/api/images/([0-9a-f]{16})\.png)", [&repo](const httplib::Request &req, httplib::Response &res) {
    const auto path = repo.find_image(req.matches[1]);
    if (!path) {
      send_error(res, 404, "unknown image");
      return;
    }
    const auto bytes = image_io::read_file(*path);
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
  });

  srv.Post(R"(/api/runs/([^/]+)/selection)", [&repo](const httplib::Request &req, httplib::Response &res) {
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("candidate_ids") ||
        !body["candidate_ids"].is_array() ||
        !std::all_of(body["candidate_ids"].begin(), body["candidate_ids"].end(),
                     [](const json &v) { return v.is_string(); })) {
      send_error(res, 400, "expected {\"candidate_ids\": [string, ...]}");
      return;
    }
    const std::string run_id = req.matches[1];
    try {
      repo.load(run_id);
    } catch (const InputError &e) {
      send_error(res, 404, e.what());
      return;
    }
    try {
      send_json(res, repo.record_human_selection(run_id, body["candidate_ids"].get<std::vector<std::string>>()));
    } catch (const InputError &e) {
      send_error(res, 422, e.what());
    }
  });

  if (!static_dir.empty()) {
    if (!fs::is_directory(static_dir))
      throw InputError("static directory " + static_dir.string() + " does not exist");
    srv.set_mount_point("/", static_dir.string());
  }

  srv.set_exception_handler([](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception &e) {
      send_error(res, 500, e.what());
    }
  });
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::listen(const std::string &host, int port) {
  if (!impl_->http.bind_to_port(host, port))
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  serve();
}

int ApiServer::bind_any(const std::string &host) {
  const int port = impl_->http.bind_to_any_port(host);
  if (port < 0)
    throw std::runtime_error("cannot bind an ephemeral port on " + host);
  return port;
}

void ApiServer::serve() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running())
    impl_->http.stop();
}

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

} // namespace adgen
