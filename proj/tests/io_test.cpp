/*
 * Copyright 2026 The kmc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kmc/io.hpp"

namespace {

kmc::LabeledSample csv(const std::string& text, int label_column = -1) {
  std::istringstream in(text);
  return kmc::parse_csv(in, label_column);
}

kmc::LabeledSample sparse(const std::string& text) {
  std::istringstream in(text);
  return kmc::parse_sparse(in);
}

std::size_t parse_error_line(const std::function<void()>& f) {
  try {
    f();
  } catch (const kmc::ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(Csv, TwoRows) {
  const auto s = csv("1.0,2.0,1\n0.5,0.5,-1\n", 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_EQ(s.x(0)[1], 2.0);
  EXPECT_EQ(s.labels(), (std::vector<int>{1, -1}));
}

TEST(Csv, ZeroLabelMapsToMinusOne) {
  const auto s = csv("0,3.5\n1,1\n", 0);
  EXPECT_EQ(s.labels(), (std::vector<int>{-1, 1}));
  EXPECT_EQ(s.x(0)[0], 3.5);
}

TEST(Csv, HeaderSkipped) {
  const auto s = csv("a,b,label\n1,2,1\r\n\n3,4,-1\n");
  EXPECT_EQ(s.size(), 2u);
}

TEST(Csv, Errors) {
  EXPECT_EQ(parse_error_line([] { csv("a,b,1\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { csv("1,2,1\n1,2\n"); }), 2u);
  EXPECT_EQ(parse_error_line([] { csv("1,2,1\n1,x,1\n"); }), 2u);
  EXPECT_THROW(csv("1,2,3\n"), kmc::InputError);
  EXPECT_THROW(csv(""), kmc::ParseError);
  EXPECT_THROW(kmc::load_csv("/nonexistent/file.csv"), kmc::IoError);
}

TEST(Csv, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "kmc_io_test.csv";
  {
    std::ofstream out(path);
    out << "x1,x2,y\n0.1,0.2,1\n0.3,0.4,0\n";
  }
  const auto s = kmc::load_csv(path.string());
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.source(), path.string());
  std::filesystem::remove(path);
}

TEST(Sparse, Examples) {
  const auto s = sparse("+1 1:0.5 3:1.0\n-1\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 3);
  EXPECT_EQ(s.x(0)[0], 0.5);
  EXPECT_EQ(s.x(0)[1], 0.0);
  EXPECT_EQ(s.x(0)[2], 1.0);
  EXPECT_EQ(s.y(0), 1);
  EXPECT_EQ(s.x(1).squaredNorm(), 0.0);
  EXPECT_EQ(s.y(1), -1);
}

TEST(Sparse, CommentsAndZeroLabels) {
  const auto s = sparse("# header\n0 2:1 # trailing\n\n1 1:2\n");
  EXPECT_EQ(s.labels(), (std::vector<int>{-1, 1}));
}

TEST(Sparse, Errors) {
  EXPECT_EQ(parse_error_line([] { sparse("1 2:x\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { sparse("1 1:1\n1 3:1 2:1\n"); }), 2u);
  EXPECT_EQ(parse_error_line([] { sparse("1 2:1 2:3\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { sparse("1 0:1\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { sparse("1 1.5:1\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { sparse("x 1:1\n"); }), 1u);
  EXPECT_THROW(sparse("2 1:1\n"), kmc::InputError);
  EXPECT_THROW(kmc::load_sparse("/nonexistent/file.svm"), kmc::IoError);
}

}  // namespace
