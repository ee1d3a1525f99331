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

#ifndef SEMTENT_TESTS_TEST_UTIL_H_
#define SEMTENT_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "semtent/records.h"

namespace semtent::testing {

inline std::filesystem::path test_dir() { return SEMTENT_TEST_DIR; }
inline std::filesystem::path data_path(const std::string& name) {
  return test_dir() / "data" / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("semtent-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// One generation whose token log-probs are given directly.
inline Generation gen(std::string text, std::vector<double> logprobs, double temperature = 0.5) {
  Generation g;
  g.text = std::move(text);
  for (std::size_t i = 0; i < logprobs.size(); ++i) g.tokens.push_back("t" + std::to_string(i));
  g.token_logprobs = std::move(logprobs);
  g.sampling_meta.temperature = temperature;
  return g;
}

// Single-token generation with likelihood p.
inline Generation gen_p(std::string text, double p) { return gen(std::move(text), {std::log(p)}); }

}  // namespace semtent::testing

#endif  // SEMTENT_TESTS_TEST_UTIL_H_
