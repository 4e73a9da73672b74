// Copyright 2026 The trajcast Authors
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

#include "trajcast/error.hpp"
#include "trajcast/io/checkpoint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace trajcast::io;
namespace nd = trajcast::ndgrad;

namespace
{
Checkpoint sample()
{
  Checkpoint cp;
  cp.config = {{"hidden_dim", 32}, {"variant", "sd-att"}};
  cp.params.add("b.bias", nd::Tensor::vector({0.1, -2.5, 1e-300}));
  cp.params.add("a.weight", nd::Tensor::matrix(2, 2, {1.0, 2.0, 3.0, std::numeric_limits<double>::denorm_min()}));
  cp.params.add("s", nd::Tensor::scalar(-0.0));
  return cp;
}

std::string bytes_of(const Checkpoint & cp)
{
  std::ostringstream out;
  write_checkpoint(out, cp);
  return out.str();
}
}  // namespace

TEST(Checkpoint, RoundTripIsBitExact)
{
  auto cp = sample();
  std::istringstream in(bytes_of(cp));
  auto back = read_checkpoint(in);
  EXPECT_EQ(back.version, Checkpoint::kVersion);
  EXPECT_EQ(back.config, cp.config);
  ASSERT_EQ(back.params.size(), cp.params.size());
  for (const auto & [name, t] : cp.params) {
    const auto & u = back.params.at(name);
    ASSERT_EQ(u.shape(), t.shape()) << name;
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(std::signbit(u[i]), std::signbit(t[i]));
      EXPECT_EQ(u[i], t[i]) << name << "[" << i << "]";
    }
  }
}

TEST(Checkpoint, SameParametersSameBytes)
{
  EXPECT_EQ(bytes_of(sample()), bytes_of(sample()));
  auto cp = sample();
  std::istringstream in(bytes_of(cp));
  EXPECT_EQ(bytes_of(read_checkpoint(in)), bytes_of(cp));
}

TEST(Checkpoint, BadMagicIsParseError)
{
  auto text = bytes_of(sample());
  text[0] = 'X';
  std::istringstream in(text);
  EXPECT_THROW(read_checkpoint(in), trajcast::ParseError);
}

TEST(Checkpoint, TruncatedDataIsParseError)
{
  auto text = bytes_of(sample());
  text.resize(text.size() - 4);
  std::istringstream in(text);
  EXPECT_THROW(read_checkpoint(in), trajcast::ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_checkpoint(empty), trajcast::ParseError);
}
