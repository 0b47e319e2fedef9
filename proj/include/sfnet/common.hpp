// Copyright 2026 The SFNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFNET_COMMON_HPP_
#define SFNET_COMMON_HPP_

#include <stdexcept>
#include <string>

namespace sfnet {

// Error taxonomy. All engine errors derive from Error so callers can catch
// broadly; the CLI maps subclasses to distinct exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration (e.g. sample rate other than 48 kHz).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or non-finite input data.
struct DataError : Error {
  using Error::Error;
};

// Mismatched shapes between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Operation applied in the wrong state (compressed-flag misuse, closed
// stream, stream-state shape mismatch).
struct StateError : Error {
  using Error::Error;
};

// Mathematically undefined request (zero reference signal, silent mix input).
struct DomainError : Error {
  using Error::Error;
};

}  // namespace sfnet

#endif  // SFNET_COMMON_HPP_
