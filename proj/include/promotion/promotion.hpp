/* Copyright 2026 The Promotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROMOTION_PROMOTION_HPP_
#define PROMOTION_PROMOTION_HPP_

#include "promotion/error.hpp"
#include "promotion/flow.hpp"
#include "promotion/image.hpp"
#include "promotion/loss_metrics.hpp"
#include "promotion/media_io.hpp"
#include "promotion/model.hpp"
#include "promotion/nn/checkpoint.hpp"
#include "promotion/nn/grad_check.hpp"
#include "promotion/nn/init.hpp"
#include "promotion/nn/ops.hpp"
#include "promotion/nn/tensor.hpp"
#include "promotion/priors.hpp"
#include "promotion/synthesis.hpp"
#include "promotion/train.hpp"

#endif  // PROMOTION_PROMOTION_HPP_
