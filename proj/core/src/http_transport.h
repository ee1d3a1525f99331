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

#ifndef SEMTENT_SRC_HTTP_TRANSPORT_H_
#define SEMTENT_SRC_HTTP_TRANSPORT_H_

#include <atomic>
#include <cstddef>
#include <semaphore>
#include <string>
#include <string_view>

#include "semtent/entailment.h"

namespace semtent::internal {

// JSON-over-HTTP POST with bounded concurrency and retry.
class JsonTransport {
 public:
  explicit JsonTransport(HttpOptions options);

  // Returns the response body of a 2xx reply to POST {base}{path}.
  std::string post(std::string_view path, const std::string& body);

  std::size_t retries() const { return retries_.load(); }
  std::size_t requests() const { return requests_.load(); }

 private:
  HttpOptions options_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> requests_{0};
};

}  // namespace semtent::internal

#endif  // SEMTENT_SRC_HTTP_TRANSPORT_H_
