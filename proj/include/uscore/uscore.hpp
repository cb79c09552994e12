/*
 * Copyright 2026 The uscore Authors
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

#include "uscore/chains.hpp"
#include "uscore/common.hpp"
#include "uscore/couplings.hpp"
#include "uscore/dynamics.hpp"
#include "uscore/estimators.hpp"
#include "uscore/functionals.hpp"
#include "uscore/io.hpp"
#include "uscore/lattice.hpp"
#include "uscore/models.hpp"
#include "uscore/oracle.hpp"
#include "uscore/pool.hpp"
#include "uscore/rng.hpp"
#include "uscore/weights.hpp"

#include "uscore/driver/config.hpp"
#include "uscore/driver/csv.hpp"
#include "uscore/driver/experiments.hpp"
#include "uscore/driver/manifest.hpp"
#include "uscore/driver/sgd.hpp"
