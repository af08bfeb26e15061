// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

#pragma once

#include "rankone/exactnum.hpp"
#include "rankone/factor.hpp"
#include "rankone/f2.hpp"
#include "rankone/polymod.hpp"
#include "rankone/curvefam.hpp"
#include "rankone/redtype.hpp"
#include "rankone/localimg.hpp"
#include "rankone/selmer.hpp"
#include "rankone/json_io.hpp"
#include "rankone/sitebuilder.hpp"
#include "rankone/pairsearch.hpp"
#include "rankone/certify.hpp"
