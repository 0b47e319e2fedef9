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

#ifndef SFNET_SFNET_HPP_
#define SFNET_SFNET_HPP_

#include "sfnet/arch.hpp"
#include "sfnet/band_ops.hpp"
#include "sfnet/common.hpp"
#include "sfnet/frontend.hpp"
#include "sfnet/graph.hpp"
#include "sfnet/metrics.hpp"
#include "sfnet/nn_core.hpp"
#include "sfnet/wav.hpp"
#include "sfnet/weights.hpp"

#endif  // SFNET_SFNET_HPP_
