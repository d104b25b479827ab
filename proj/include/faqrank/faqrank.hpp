// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "faqrank/alignment.hpp"
#include "faqrank/bootstrap.hpp"
#include "faqrank/corpus.hpp"
#include "faqrank/eval.hpp"
#include "faqrank/features.hpp"
#include "faqrank/model.hpp"
#include "faqrank/trainer.hpp"
#include "faqrank/util.hpp"
