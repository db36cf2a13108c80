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

#include "pacsim/error.hpp"

namespace pacsim {

const char *error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_tensor:
            return "malformed tensor";
        case ErrorCode::malformed_plane:
            return "malformed plane";
        case ErrorCode::length_mismatch:
            return "length mismatch";
        case ErrorCode::empty_group:
            return "empty group";
        case ErrorCode::out_of_range:
            return "out of range";
        case ErrorCode::shape_mismatch:
            return "shape mismatch";
        case ErrorCode::overflow:
            return "overflow";
        case ErrorCode::underflow:
            return "underflow";
        case ErrorCode::non_finite:
            return "non-finite value";
        case ErrorCode::io:
            return "i/o error";
        case ErrorCode::manifest:
            return "invalid manifest";
    }
    return "error";
}

}  // namespace pacsim
