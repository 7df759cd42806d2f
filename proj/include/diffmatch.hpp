// Copyright 2026 The diffmatch Authors.
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

#pragma once

#include "diffmatch/channel.hpp"
#include "diffmatch/classical.hpp"
#include "diffmatch/config.hpp"
#include "diffmatch/dqn.hpp"
#include "diffmatch/errors.hpp"
#include "diffmatch/gdm.hpp"
#include "diffmatch/harness.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/qoe.hpp"
#include "diffmatch/rng.hpp"
#include "diffmatch/scenario.hpp"
#include "diffmatch/scorer.hpp"
