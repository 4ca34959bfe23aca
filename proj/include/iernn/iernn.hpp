/*
* Copyright (C) 2026 The IeRNN Authors
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
#ifndef IERNN_IERNN_HPP
#define IERNN_IERNN_HPP

#include "iernn/adam.hpp"
#include "iernn/arima.hpp"
#include "iernn/checkpoint.hpp"
#include "iernn/config.hpp"
#include "iernn/epi.hpp"
#include "iernn/harness.hpp"
#include "iernn/iernn_model.hpp"
#include "iernn/ingest.hpp"
#include "iernn/lstm.hpp"
#include "iernn/lstm_baseline.hpp"
#include "iernn/nelder_mead.hpp"
#include "iernn/region_graph.hpp"

#endif // IERNN_IERNN_HPP
