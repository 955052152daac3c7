// Copyright 2026 The GRIP Engine Authors
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

#ifndef GRIP__RNG_HPP_
#define GRIP__RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace grip
{
/// Named, seedable generator. Every consumer of randomness receives one of
/// these explicitly; child streams are derived by name so adding a consumer
/// does not perturb the draws of another.
class Rng
{
public:
  explicit Rng(std::uint64_t seed, std::string name = "root");

  Rng derive(std::string_view child) const;
  Rng derive(std::string_view child, std::uint64_t index) const;

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);  // uniform in [0, n)

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string & name() const noexcept { return name_; }
  std::mt19937_64 & engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  std::string name_;
  std::mt19937_64 engine_;
};
}  // namespace grip

#endif  // GRIP__RNG_HPP_
