// Copyright 2026 The chartrans Authors. All Rights Reserved.
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

#include "chartrans/adam.hpp"
#include "chartrans/checkpoint.hpp"
#include "chartrans/data.hpp"
#include "chartrans/decode.hpp"
#include "chartrans/errors.hpp"
#include "chartrans/featenc.hpp"
#include "chartrans/metrics.hpp"
#include "chartrans/ops.hpp"
#include "chartrans/rng.hpp"
#include "chartrans/synthetic.hpp"
#include "chartrans/tensor.hpp"
#include "chartrans/train.hpp"
#include "chartrans/train_config.hpp"
#include "chartrans/transformer.hpp"
#include "chartrans/vocab.hpp"
