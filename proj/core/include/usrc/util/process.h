// Copyright 2026 The usrc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USRC_UTIL_PROCESS_H_
#define USRC_UTIL_PROCESS_H_

#include <filesystem>
#include <map>
#include <string>

namespace usrc::util {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;  // combined stdout and stderr, truncated
};

// Runs cmd through /bin/sh -c, killing its process group after timeout.
ProcessResult RunCommand(const std::string& cmd, double timeout_seconds);

// Single-quotes s for /bin/sh.
std::string ShellQuote(const std::string& s);

// Replaces {key} with ShellQuote(value) for every entry.
std::string SubstituteTemplate(const std::string& tmpl,
                               const std::map<std::string, std::string>& vars);

// Fresh private directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace usrc::util

#endif  // USRC_UTIL_PROCESS_H_
