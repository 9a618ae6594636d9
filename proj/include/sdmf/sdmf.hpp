// Copyright 2026 The SDMF Authors
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

#ifndef SDMF_SDMF_HPP_
#define SDMF_SDMF_HPP_

#include "sdmf/bpr.hpp"
#include "sdmf/client.hpp"
#include "sdmf/codec.hpp"
#include "sdmf/config.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/exact_sum.hpp"
#include "sdmf/experiment.hpp"
#include "sdmf/fake_grad.hpp"
#include "sdmf/matrix.hpp"
#include "sdmf/metrics.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/protocol.hpp"
#include "sdmf/random.hpp"
#include "sdmf/rr.hpp"
#include "sdmf/socket_transport.hpp"

#endif  // SDMF_SDMF_HPP_
