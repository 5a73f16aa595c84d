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

#include "smokeynet/time.hpp"

#include <charconv>

#include <fmt/format.h>

#include "smokeynet/error.hpp"

namespace smokeynet {
namespace {

int parse_field(std::string_view text, size_t pos, size_t len) {
  if (pos + len > text.size()) {
    fail(ErrorCode::kDataError, fmt::format("malformed timestamp '{}'", text));
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len) {
    fail(ErrorCode::kDataError, fmt::format("malformed timestamp '{}'", text));
  }
  return value;
}

}  // namespace

UtcInstant parse_iso8601(std::string_view text) {
  while (!text.empty() && (text.back() == 'Z' || text.back() == 'z' || text.back() == ' ' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    fail(ErrorCode::kDataError, fmt::format("malformed timestamp '{}'", text));
  }
  const int year = parse_field(text, 0, 4);
  const int month = parse_field(text, 5, 2);
  const int day = parse_field(text, 8, 2);
  const int hour = parse_field(text, 11, 2);
  const int minute = parse_field(text, 14, 2);
  int second = 0;
  if (text.size() > 16) {
    if (text[16] != ':' || text.size() != 19) {
      fail(ErrorCode::kDataError, fmt::format("malformed timestamp '{}'", text));
    }
    second = parse_field(text, 17, 2);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    fail(ErrorCode::kDataError, fmt::format("invalid calendar time '{}'", text));
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
         std::chrono::seconds{second};
}

std::string format_iso8601(UtcInstant t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

}  // namespace smokeynet
