// Copyright 2026 The Rundir Authors
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

#include "rundir/backend.hpp"
#include "rundir/bootstrap.hpp"
#include "rundir/config.hpp"
#include "rundir/discovery.hpp"
#include "rundir/errors.hpp"
#include "rundir/exec_backend.hpp"
#include "rundir/fsview.hpp"
#include "rundir/hooks.hpp"
#include "rundir/ignore.hpp"
#include "rundir/lifecycle.hpp"
#include "rundir/links.hpp"
#include "rundir/orchestrator.hpp"
#include "rundir/semver.hpp"
#include "rundir/subprocess.hpp"
#include "rundir/tool_runner.hpp"
