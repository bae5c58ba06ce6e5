/* Copyright 2026 The placement-opt Authors. All Rights Reserved.

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
#ifndef PLACEMENT_IO_H_
#define PLACEMENT_IO_H_

#include <string>
#include <string_view>

#include "json.hpp"

namespace placement {

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

// Parses JSON, converting parse failures into Error(kParse).
nlohmann::json ParseJson(std::string_view text);

// Pretty-printed with a trailing newline; doubles print with round-trip
// precision so documents reload bit-exactly.
std::string DumpJson(const nlohmann::json& doc);

}  // namespace placement

#endif  // PLACEMENT_IO_H_
