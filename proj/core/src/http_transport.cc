// Copyright 2026 The semtent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "http_transport.h"

#include <regex>
#include <thread>

#include "httplib.h"
#include "semtent/errors.h"

namespace semtent::internal {
namespace {

struct ReleaseOnExit {
  std::counting_semaphore<>& sem;
  ~ReleaseOnExit() { sem.release(); }
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

JsonTransport::JsonTransport(HttpOptions options)
    : options_(std::move(options)),
      in_flight_(options_.max_in_flight > 0 ? options_.max_in_flight : 1) {
  if (options_.max_attempts < 1) throw ConfigError("max_attempts must be ≥ 1");
  if (options_.max_in_flight < 1) throw ConfigError("max_in_flight must be ≥ 1");
  static const std::regex kUrl(R"(^(http)://([^/:]+)(:[0-9]+)?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint, m, kUrl)) {
    throw ConfigError("endpoint must look like http://host[:port][/path], got '" +
                      options_.endpoint + "'");
  }
  scheme_host_port_ = m[1].str() + "://" + m[2].str() + m[3].str();
  base_path_ = m[4].str();
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string JsonTransport::post(std::string_view path, const std::string& body) {
  in_flight_.acquire();
  ReleaseOnExit release{in_flight_};

  const std::string target = base_path_ + std::string(path);
  const auto timeout = options_.timeout;
  auto backoff = options_.initial_backoff;

  for (int attempt = 1;; ++attempt) {
    ++requests_;
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(target, body, "application/json");

    std::exception_ptr failure;
    bool transient = false;
    if (!res) {
      const auto err = res.error();
      const std::string msg = "POST " + target + ": " + httplib::to_string(err);
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        failure = std::make_exception_ptr(TimeoutError(msg));
      } else {
        failure = std::make_exception_ptr(TransportError(msg));
      }
      transient = true;
    } else if (res->status >= 200 && res->status < 300) {
      return res->body;
    } else {
      failure = std::make_exception_ptr(HttpStatusError(
          res->status, "POST " + target + " returned HTTP " + std::to_string(res->status)));
      transient = retryable_status(res->status);
    }

    if (!transient || attempt >= options_.max_attempts) std::rethrow_exception(failure);
    ++retries_;
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace semtent::internal
