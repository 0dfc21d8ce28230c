// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Umbrella header.

#ifndef JLSAMPLER_HPP
#define JLSAMPLER_HPP

#include "jlsampler/core.hpp"
#include "jlsampler/counterexample.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/lanczos.hpp"
#include "jlsampler/mcsim.hpp"
#include "jlsampler/ncx2.hpp"
#include "jlsampler/objective.hpp"
#include "jlsampler/optimizer.hpp"

#endif  // JLSAMPLER_HPP
