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

#ifndef PROPAGATOR_HTTP_API_H_
#define PROPAGATOR_HTTP_API_H_

#include <memory>
#include <string>
#include <string_view>

#include "propagator/service.h"

namespace httplib {
class Server;
}

namespace propagator {

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

// Maps an Error code onto an HTTP status.
int status_for_error(std::string_view code);

// Routes one request. `clock` enables GET/POST /clock for simulated runs.
ApiResponse handle_request(CampaignService& service, std::string_view method, std::string_view path,
                           std::string_view body, SimulatedClock* clock = nullptr);

class HttpServer {
 public:
  explicit HttpServer(CampaignService& service, SimulatedClock* clock = nullptr);
  ~HttpServer();

  // Returns the bound port, or throws BindFailed. Port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace propagator

#endif  // PROPAGATOR_HTTP_API_H_
