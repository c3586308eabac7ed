// SPDX-License-Identifier: Apache-2.0
//
// risnp: blockage-aware RIS-aided mmWave MIMO simulation and optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef RISNP_RISNP_HPP
#define RISNP_RISNP_HPP

// Everything except the command-line front end, which also needs CLI11.
#include "beamforming.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "core.hpp"
#include "detection.hpp"
#include "io.hpp"
#include "montecarlo.hpp"
#include "optimizer.hpp"
#include "selftest.hpp"

#endif
