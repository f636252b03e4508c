/*
 * Copyright 2026 The spmsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "spmsim/engine.hpp"
#include "spmsim/endpoints.hpp"
#include "spmsim/layout.hpp"
#include "spmsim/oracle.hpp"
#include "spmsim/profiling.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/request.hpp"
#include "spmsim/rng.hpp"
#include "spmsim/router.hpp"
#include "spmsim/scenario.hpp"
#include "spmsim/sweep.hpp"
#include "spmsim/system.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/trace.hpp"
#include "spmsim/traffic.hpp"
#include "spmsim/types.hpp"
