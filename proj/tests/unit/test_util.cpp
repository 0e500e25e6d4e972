// Copyright 2026 The ClassLens Authors.
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

#include <doctest.h>

#include <set>

#include "classlens/error.hpp"
#include "classlens/util.hpp"
#include "test_support.hpp"

using namespace classlens;

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hmac-sha256 matches RFC 4231 case 2") {
  CHECK(hmac_sha256_hex("Jefe", "what do ya want for nothing?") ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("trim and to_lower") {
  CHECK(trim("  a b \t\r\n") == "a b");
  CHECK(trim("") == "");
  CHECK(to_lower("RunOff 6A") == "runoff 6a");
}

TEST_CASE("timestamps format and parse as UTC") {
  auto t = parse_iso_timestamp("2024-03-11T09:21:39Z");
  REQUIRE(t);
  CHECK(format_timestamp(*t) == "2024-03-11T09:21:39Z");
  CHECK_FALSE(parse_iso_timestamp("2024-03-11 09:21"));
  CHECK(format_timestamp(Timestamp{}) == "1970-01-01T00:00:00Z");
}

TEST_CASE("atomic writes create parents and replace content") {
  testing::ScratchDir dir;
  auto p = dir.path() / "a" / "b" / "doc.json";
  write_file_atomic(p, "one");
  CHECK(read_file(p) == "one");
  write_file_atomic(p, "two");
  CHECK(read_file(p) == "two");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(p.parent_path())) ++entries;
  CHECK(entries == 1);  // no temp files left behind
}

TEST_CASE("read_file on a missing path is an IoFailure") {
  try {
    read_file("/nonexistent/classlens/file");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIoFailure);
  }
}

TEST_CASE("SeededRng is reproducible and bounded") {
  SeededRng a(42), b(42), c(43);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.below(7));
    xb.push_back(b.below(7));
    xc.push_back(c.below(7));
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  for (auto x : xa) CHECK(x < 7);

  SeededRng u(1);
  for (int i = 0; i < 1000; ++i) {
    double d = u.unit();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("SeededRng shuffle is a permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  SeededRng rng(9);
  rng.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}
