/* Copyright 2026 The SmokeyNet Authors.

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

#include <chrono>
#include <string>
#include <string_view>

namespace smokeynet {

using UtcInstant = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DDTHH:MM:SS[Z]" and "YYYY-MM-DD HH:MM[:SS][Z]".
UtcInstant parse_iso8601(std::string_view text);
std::string format_iso8601(UtcInstant t);

inline UtcInstant add_minutes(UtcInstant t, long minutes) {
  return t + std::chrono::minutes(minutes);
}

struct TimeRange {
  UtcInstant begin;
  UtcInstant end;  // inclusive

  bool contains(UtcInstant t) const { return t >= begin && t <= end; }
  bool empty() const { return end < begin; }
};

}  // namespace smokeynet
