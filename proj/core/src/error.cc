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

#include "usrc/error.h"

namespace usrc {

std::string_view ErrorClassName(ErrorClass c) {
  switch (c) {
    case ErrorClass::kIo: return "io_error";
    case ErrorClass::kEmptyInput: return "empty_input";
    case ErrorClass::kInsufficientInput: return "insufficient_input";
    case ErrorClass::kConfig: return "config_error";
    case ErrorClass::kShape: return "shape_error";
    case ErrorClass::kNumeric: return "numeric_error";
    case ErrorClass::kCorruptStream: return "corrupt_stream";
    case ErrorClass::kEncode: return "encode_error";
    case ErrorClass::kAlignment: return "alignment_error";
    case ErrorClass::kVocoder: return "vocoder_error";
    case ErrorClass::kEmptyCorpus: return "empty_corpus";
    case ErrorClass::kCheckpoint: return "checkpoint_error";
  }
  return "unknown_error";
}

}  // namespace usrc
