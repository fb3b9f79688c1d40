// Copyright 2026 The ntdh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ntdh/batching.hpp"
#include "ntdh/datagen.hpp"
#include "ntdh/divergence.hpp"
#include "ntdh/error.hpp"
#include "ntdh/losses.hpp"
#include "ntdh/masking.hpp"
#include "ntdh/matrix.hpp"
#include "ntdh/mlp.hpp"
#include "ntdh/prob.hpp"
#include "ntdh/rng.hpp"
#include "ntdh/serialize.hpp"
#include "ntdh/sgd.hpp"
#include "ntdh/trainer.hpp"
