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
#include "placement/random.h"

#include <sstream>

#include "placement/error.h"

namespace placement {

std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t a,
                         std::uint64_t b) {
  return MixSeed(MixSeed(MixSeed(master) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double UniformReal(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return lo + (hi - lo) * Uniform01(rng);
}

std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "UniformIndex(0)");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

int UniformInt(Rng& rng, int lo, int hi) {
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "UniformInt range");
  return lo + static_cast<int>(
                  UniformIndex(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

std::string SerializeRng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng DeserializeRng(const std::string& state) {
  std::istringstream is(state);
  Rng rng;
  is >> rng;
  if (!is) throw Error(ErrorCode::kParse, "malformed rng state");
  return rng;
}

}  // namespace placement
