/*
 * Copyright 2026 The Propagator Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "propagator/http_api.h"

#include "httplib.h"
#include "propagator/util.h"

namespace propagator {

using nlohmann::json;

namespace {

ApiResponse ok(const json& j, int status = 200) { return {status, j.dump()}; }

ApiResponse fail(int status, std::string_view code, std::string_view message) {
  return {status, json{{"code", code}, {"message", message}}.dump()};
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error("MalformedRequest", e.what());
  }
}

json event_json(const CampaignEvent& e) { return e.to_json(); }

}  // namespace

int status_for_error(std::string_view code) {
  if (code == "UnknownCampaign" || code == "UnknownModel" || code == "UnknownCandidate" || code == "NotFound")
    return 404;
  if (code == "AlreadyDispatched" || code == "CampaignClosed" || code == "AlreadyObserved") return 409;
  if (code == "IoError" || code == "CorruptLog") return 500;
  return 400;
}

ApiResponse handle_request(CampaignService& service, std::string_view method, std::string_view path,
                           std::string_view body, SimulatedClock* clock) {
  try {
    auto parts = split(path, '/');
    parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
    const bool get = method == "GET", post = method == "POST";

    if (parts.size() == 1 && parts[0] == "models" && post) return ok({{"id", service.publish_model(body)}}, 201);
    if (parts.size() == 1 && parts[0] == "campaigns") {
      if (post) return ok({{"id", service.create_campaign(CampaignDefinition::from_json(parse_body(body)))}}, 201);
      if (get) return ok(service.campaign_ids());
    }
    if (parts.size() == 1 && parts[0] == "clock" && clock) {
      if (post) {
        const auto j = parse_body(body);
        try {
          if (j.contains("now")) clock->set(j["now"].get<Timestamp>());
          if (j.contains("advance")) {
            const auto& a = j["advance"];
            const auto secs = a.is_string() ? static_cast<Timestamp>(parse_duration(a.get<std::string>()))
                                            : a.get<Timestamp>();
            if (secs < 0) throw Error("InvalidArgument", "clock cannot move backwards");
            clock->advance(secs);
          }
        } catch (const json::exception& e) {
          throw Error("MalformedRequest", e.what());
        }
      }
      if (get || post) return ok({{"now", clock->now()}});
    }
    if (parts.size() >= 2 && parts[0] == "campaigns") {
      const auto& id = parts[1];
      if (parts.size() == 2 && get) {
        const auto def = service.definition(id);
        return ok({{"id", id},
                   {"definition", def.to_json()},
                   {"state", service.state(id) == CampaignState::kOpen ? "open" : "closed"}});
      }
      const auto& action = parts.size() == 3 ? parts[2] : std::string();
      if (action == "candidates" && post) {
        std::vector<UserRecord> users;
        try {
          users = parse_users(body);
        } catch (const Error& e) {
          if (e.code() != "EmptyDataset") throw;
        }
        return ok({{"accepted", service.ingest_candidates(id, users)}});
      }
      if (action == "recommendations" && get) return ok(candidates_to_json(service.recommendations(id)));
      if (action == "dispatch" && post) {
        const auto j = parse_body(body);
        std::optional<std::string> message;
        std::string user;
        try {
          user = j.at("user_id").get<std::string>();
          if (j.contains("message") && !j["message"].is_null()) message = j["message"].get<std::string>();
        } catch (const json::exception& e) {
          throw Error("MalformedRequest", e.what());
        }
        return ok(event_json(service.dispatch(id, user, message)), 201);
      }
      if (action == "observations" && post) {
        const auto j = parse_body(body);
        try {
          return ok(event_json(service.record_observation(id, j.at("user_id").get<std::string>(),
                                                          j.at("observed_at").get<Timestamp>())),
                    201);
        } catch (const json::exception& e) {
          throw Error("MalformedRequest", e.what());
        }
      }
      if (action == "metrics" && get) return ok(service.metrics(id).to_json());
      if (action == "events" && get) {
        json out = json::array();
        for (const auto& e : service.events(id)) out.push_back(e.to_json());
        return ok(out);
      }
      if (action == "close" && post) {
        service.close_campaign(id);
        return ok({{"id", id}, {"state", "closed"}});
      }
    }
    return fail(404, "NotFound", std::string(method) + " " + std::string(path));
  } catch (const Error& e) {
    return fail(status_for_error(e.code()), e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(500, "Internal", e.what());
  }
}

HttpServer::HttpServer(CampaignService& service, SimulatedClock* clock)
    : server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH);
  auto route = [&service, clock](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_request(service, req.method, req.path, req.body, clock);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Get(R"(/.*)", route);
  server_->Post(R"(/.*)", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("BindFailed", "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace propagator
