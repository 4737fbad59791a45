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

#ifndef USRC_ERROR_H_
#define USRC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace usrc {

// Every failure surfaced by the library carries one of these classes. The CLI
// prints ErrorClassName() as the machine-parseable first token on stderr.
enum class ErrorClass {
  kIo,
  kEmptyInput,
  kInsufficientInput,
  kConfig,
  kShape,
  kNumeric,
  kCorruptStream,
  kEncode,
  kAlignment,
  kVocoder,
  kEmptyCorpus,
  kCheckpoint,
};

std::string_view ErrorClassName(ErrorClass c);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass c, const std::string& what)
      : std::runtime_error(what), class_(c) {}

  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

[[noreturn]] inline void Fail(ErrorClass c, const std::string& what) {
  throw Error(c, what);
}

inline void Require(bool cond, ErrorClass c, const std::string& what) {
  if (!cond) throw Error(c, what);
}

}  // namespace usrc

#endif  // USRC_ERROR_H_
