#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>

#include "sarrain/csv.hpp"
#include "sarrain/error.hpp"
#include "sarrain/parallel.hpp"
#include "sarrain/rng.hpp"

using namespace sarrain;

TEST(Rng, SameSeedSameStream) {
  CounterRng a(12), b(12), c(13);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, KnownMix) {
  // SplitMix64 reference output for state 0 after one increment
  EXPECT_EQ(mix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(Rng, UniformAndBelowBounds) {
  CounterRng rng(3);
  std::array<int, 7> hits{};
  for (int i = 0; i < 70000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Rng, ShuffleIsPermutation) {
  CounterRng rng(4);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Parallel, EveryIndexVisitedOnce) {
  set_worker_count(4);
  std::vector<std::atomic<int>> seen(1000);
  parallel_for(seen.size(), [&](std::size_t i) { seen[i]++; });
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  set_worker_count(0);
}

TEST(Parallel, ExceptionPropagates) {
  for (std::size_t workers : {1u, 4u}) {
    set_worker_count(workers);
    EXPECT_THROW(parallel_for(100,
                              [](std::size_t i) {
                                if (i == 37) throw DataError("bad item");
                              }),
                 DataError);
  }
  set_worker_count(0);
}

TEST(Parallel, ZeroItemsIsNoop) {
  int calls = 0;
  parallel_for(0, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(Parallel, WorkerCountOverride) {
  set_worker_count(3);
  if (std::getenv("SARRAIN_WORKERS") == nullptr) EXPECT_EQ(worker_count(), 3u);
  set_worker_count(0);
  EXPECT_GE(worker_count(), 1u);
}

TEST(Error, KindNames) {
  EXPECT_EQ(to_string(ErrorKind::Format), "format");
  EXPECT_EQ(to_string(ErrorKind::NoSignal), "no-signal");
  const DataError e("broken", "a/b.sgrd");
  EXPECT_EQ(e.kind(), ErrorKind::Data);
  EXPECT_EQ(e.path(), "a/b.sgrd");
}

TEST(Csv, HeaderRowsAndComments) {
  const auto t = parse_csv("# note\na,b, c\n1,2,3\r\n\n4, 5 ,6\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_EQ(parse_double(t.rows[1][1]), 5.0);
  EXPECT_EQ(parse_int(t.rows[0][2]), 3);
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_csv(""), FormatError);
  EXPECT_THROW(parse_csv("a,b\n1\n"), FormatError);
  EXPECT_THROW(parse_csv("a,b\n1,2\n").column("z"), FormatError);
  EXPECT_THROW(expect_columns(parse_csv("a\n"), {"a", "b"}), FormatError);
  EXPECT_THROW(parse_double("1.5x"), FormatError);
  EXPECT_THROW(parse_double(""), FormatError);
  EXPECT_THROW(parse_int("2.0"), FormatError);
  EXPECT_THROW(read_csv("/nonexistent/x.csv"), IoError);
  EXPECT_EQ(parse_int(" -7 "), -7);
}
