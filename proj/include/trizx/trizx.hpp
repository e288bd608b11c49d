// Copyright 2026 The trizx Authors.
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

#ifndef TRIZX_TRIZX_HPP_
#define TRIZX_TRIZX_HPP_

#include "trizx/embedding.hpp"
#include "trizx/error.hpp"
#include "trizx/evaluation.hpp"
#include "trizx/knowledge_base.hpp"
#include "trizx/llm.hpp"
#include "trizx/pipeline.hpp"
#include "trizx/prompting.hpp"
#include "trizx/rerank.hpp"
#include "trizx/retrieval.hpp"

#endif  // TRIZX_TRIZX_HPP_
