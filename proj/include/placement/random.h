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
#ifndef PLACEMENT_RANDOM_H_
#define PLACEMENT_RANDOM_H_

#include <cstdint>
#include <random>
#include <string>

namespace placement {

// The standard distributions are implementation-defined, so every random draw
// in the library goes through these helpers to keep seeded runs identical
// across standard libraries.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t MixSeed(std::uint64_t x);

// Seed for substream `stream` of `master`, e.g. (seed, epoch, worker).
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t a,
                         std::uint64_t b = 0);

// Uniform in [0, 1) with 53 random bits.
double Uniform01(Rng& rng);

// Uniform in [lo, hi].
double UniformReal(Rng& rng, double lo, double hi);

// Uniform integer in [0, n). n must be positive.
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n);

// Uniform integer in [lo, hi].
int UniformInt(Rng& rng, int lo, int hi);

std::string SerializeRng(const Rng& rng);
Rng DeserializeRng(const std::string& state);

}  // namespace placement

#endif  // PLACEMENT_RANDOM_H_
