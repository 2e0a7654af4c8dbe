//
// Copyright 2026 The dpalloc Authors
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
//
#ifndef DPALLOC_DPALLOC_HPP_
#define DPALLOC_DPALLOC_HPP_

#include "dpalloc/allocators.hpp"
#include "dpalloc/cli_io.hpp"
#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"
#include "dpalloc/harness.hpp"
#include "dpalloc/mechanisms.hpp"
#include "dpalloc/metrics.hpp"
#include "dpalloc/repair.hpp"
#include "dpalloc/rng.hpp"

#endif  // DPALLOC_DPALLOC_HPP_
