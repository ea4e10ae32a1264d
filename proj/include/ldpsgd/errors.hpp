// Copyright 2026 The ldpsgd Authors
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

#pragma once

#include <stdexcept>

namespace ldpsgd {

// Invalid wiring of mechanisms, budgets, dimensions or experiment grids.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file does not match the declared schema (missing column, bad header).
struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A row of an otherwise well-formed file cannot be encoded.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric invariant was violated at runtime (NaN/Inf escaped a kernel).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ldpsgd
