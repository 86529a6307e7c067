/* Copyright 2026 The lgvqa Authors. All Rights Reserved.

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

#pragma once

#include <ostream>

#include "lgvqa_cli/settings.hpp"

namespace lgvqa::cli {

int cmd_synth(const Settings& s, std::ostream& out);
int cmd_convert(const Settings& s, std::ostream& out);
int cmd_guidance(const Settings& s, std::ostream& out, std::ostream& err);
int cmd_zero_shot(const Settings& s, std::ostream& out);
int cmd_train(const Settings& s, std::ostream& out);
int cmd_eval(const Settings& s, std::ostream& out);
int cmd_compare(const Settings& s, std::ostream& out);

}  // namespace lgvqa::cli
