/*
 *  Copyright 2026 The hesslab Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include "hesslab/common.hpp"

namespace hesslab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Numeric: return "numeric error";
    case ErrorCode::Regime: return "regime error";
    case ErrorCode::NotInvertible: return "not invertible";
    case ErrorCode::FilterEmpty: return "filter emptied spectrum";
    case ErrorCode::AllDiverged: return "all runs diverged";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::InvalidArgument: return "invalid argument";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hesslab
