// Copyright 2026 The pacsim Authors
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

#ifndef PACSIM_ERROR_HPP_
#define PACSIM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pacsim {

enum class ErrorCode {
    malformed_tensor,
    malformed_plane,
    length_mismatch,
    empty_group,
    out_of_range,
    shape_mismatch,
    overflow,
    underflow,
    non_finite,
    io,
    manifest,
};

const char *error_code_name(ErrorCode code);

/// All errors raised by the library. The code identifies the failure class;
/// the message carries the detail.
class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string &detail() const noexcept { return detail_; }

   private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace pacsim

#endif  // PACSIM_ERROR_HPP_
