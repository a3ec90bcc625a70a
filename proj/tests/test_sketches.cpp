#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "smoments/bounded_count_sketch.hpp"
#include "smoments/cursor.hpp"
#include "smoments/generator.hpp"
#include "smoments/l2hh.hpp"
#include "smoments/misra_gries.hpp"
#include "smoments/turnstile_fp.hpp"

using namespace smoments;

namespace {

Stream make_stream(std::uint64_t n, std::vector<ItemId> updates) {
  Stream s;
  s.universe = n;
  s.updates = std::move(updates);
  return s;
}

}  // namespace

TEST_CASE("misra-gries contract instances") {
  MisraGries mg(0.5);
  for (ItemId a : {1, 1, 1, 2, 3}) mg.update(a);
  auto m = mg.query();
  CHECK(std::count(m.begin(), m.end(), 1) == 1);  // f=3 >= 2.5

  MisraGries one(1.0);
  one.update(9);
  CHECK(one.query() == std::vector<ItemId>{9});
}

TEST_CASE("misra-gries exhaustive over tiny streams") {
  // Every stream of length 1..6 over {1,2,3} and c in {1/3, 1/2}.
  for (double c : {1.0 / 3.0, 0.5}) {
    for (int len = 1; len <= 6; ++len) {
      int total = 1;
      for (int i = 0; i < len; ++i) total *= 3;
      for (int code = 0; code < total; ++code) {
        MisraGries mg(c);
        int f[4] = {0, 0, 0, 0};
        int v = code;
        for (int i = 0; i < len; ++i) {
          ItemId a = static_cast<ItemId>(v % 3) + 1;
          v /= 3;
          mg.update(a);
          ++f[a];
        }
        auto out = mg.query();
        CHECK(out.size() <= mg.slots());
        for (ItemId a = 1; a <= 3; ++a) {
          if (f[a] >= c * len)
            CHECK(std::count(out.begin(), out.end(), a) == 1);
        }
      }
    }
  }
}

TEST_CASE("misra-gries determinism") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::Zipf;
  g.n = 40;
  g.m = 1000;
  g.seed = 5;
  Stream s = generate(g);
  MisraGries a(0.1), b(0.1);
  for (ItemId x : s.updates) {
    a.update(x);
    b.update(x);
  }
  CHECK(a.query() == b.query());
  for (ItemId x = 1; x <= 40; ++x) CHECK(a.count(x) == b.count(x));
}

TEST_CASE("bounded count sketch single item") {
  BoundedCountSketch sk(5, 8, 10, 77);
  for (int i = 0; i < 100; ++i) sk.update(4);
  auto q = sk.query(4);
  REQUIRE(q.has_value());
  CHECK(*q == doctest::Approx(100.0));

  // f above cap 2^10 flips to the infinity marker.
  for (int i = 0; i < 1000; ++i) sk.update(4);
  CHECK_FALSE(sk.query(4).has_value());
}

TEST_CASE("bounded count sketch infinity is monotone, exhaustively") {
  // All streams of length <= 5 over two items, small cap.
  for (int len = 1; len <= 5; ++len) {
    int total = 1 << len;
    for (int code = 0; code < total; ++code) {
      BoundedCountSketch sk(3, 2, 2, 13);
      bool seen_inf[2] = {false, false};
      for (int i = 0; i < len; ++i) {
        ItemId a = ((code >> i) & 1) + 1;
        for (int rep = 0; rep < 3; ++rep) sk.update(a);  // push counts quickly
        for (ItemId q = 1; q <= 2; ++q) {
          bool inf = !sk.query(q).has_value();
          if (seen_inf[q - 1]) CHECK(inf);
          if (inf) seen_inf[q - 1] = true;
        }
      }
    }
  }
}

TEST_CASE("bounded count sketch error within eps sqrt(F2)") {
  const double eps = 0.3;
  auto width = static_cast<std::uint32_t>(std::ceil(6.0 / (eps * eps)));
  int good = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Zipf;
    g.n = 60;
    g.m = 400;
    g.seed = 100 + t;
    Stream s = generate(g);
    double f2 = exact_moment(s, 2.0);
    FrequencyVector fv(s);
    BoundedCountSketch sk(5, width, 30, 5000 + t);
    for (ItemId a : s.updates) sk.update(a);
    bool ok = true;
    for (ItemId a = 1; a <= 8; ++a) {
      auto q = sk.query(a);
      if (!q || std::abs(*q - fv.count(a)) > eps * std::sqrt(f2)) ok = false;
    }
    if (ok) ++good;
  }
  CHECK(good >= static_cast<int>(0.90 * trials));
}

TEST_CASE("l2 heavy hitters on a single item") {
  L2HeavyHitters hh(0.25, 0.05, 1000, 3);
  for (int i = 0; i < 50; ++i) hh.update(77);
  auto out = hh.query();
  REQUIRE(out.size() >= 1);
  CHECK(out[0].first == 77);
  CHECK(out[0].second == doctest::Approx(50.0));
}

TEST_CASE("l2 heavy hitters empty stream") {
  L2HeavyHitters hh(0.25, 0.05, 1000, 3);
  CHECK(hh.query().empty());
}

TEST_CASE("l2 heavy hitters recover a planted item") {
  // f^2 = 4 eps^2 F2 with eps = 0.25: 300 singletons and one item at f = 10.
  const double eps = 0.25;
  int recovered = 0;
  int accurate = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Stream s = make_stream(2000, {});
    for (ItemId b = 1; b <= 300; ++b) s.updates.push_back(b);
    for (int i = 0; i < 10; ++i) s.updates.push_back(1000);
    s = shuffle(s, 700 + t);
    L2HeavyHitters hh(eps, 0.05, 2000, 9000 + t);
    for (ItemId a : s.updates) hh.update(a);
    for (const auto& [id, est] : hh.query()) {
      if (id == 1000) {
        ++recovered;
        if (std::abs(est - 10.0) <= eps * 10.0) ++accurate;
        break;
      }
    }
  }
  CHECK(recovered >= static_cast<int>(0.92 * trials));
  CHECK(accurate >= static_cast<int>(0.90 * trials));
}

TEST_CASE("turnstile fp on a single item") {
  const double eps = 0.25;
  for (double p : {0.5, 1.5}) {
    int good = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
      TurnstileFp sk(p, eps, 0.1, 100, 40000 + t);
      for (int i = 0; i < 32; ++i) sk.update(7);
      auto q = sk.query();
      REQUIRE(q.has_value());
      double truth = std::pow(32.0, p);
      if (*q >= (1 - eps) * truth && *q <= (1 + eps) * truth) ++good;
    }
    CHECK(good >= static_cast<int>(0.88 * trials));
  }
}

TEST_CASE("turnstile fp zero stream and deletions") {
  TurnstileFp sk(1.5, 0.25, 0.1, 100, 1);
  CHECK(*sk.query() == 0.0);
  // Insert then fully delete: back to zero.
  sk.update(3, 5.0);
  sk.update(3, -5.0);
  CHECK(*sk.query() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("turnstile fp tracks F1 for p near 1") {
  const double eps = 0.25;
  int good = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Zipf;
    g.n = 50;
    g.m = 200;
    g.seed = t;
    Stream s = generate(g);
    TurnstileFp sk(1.0, eps, 0.1, 50, 60000 + t);
    for (ItemId a : s.updates) sk.update(a);
    auto q = sk.query();
    if (q && std::abs(*q - 200.0) <= eps * 200.0) ++good;
  }
  CHECK(good >= static_cast<int>(0.88 * trials));
}

TEST_CASE("turnstile fp fails deterministically at its cap") {
  TurnstileFpOptions opts;
  opts.max_updates = 5;
  TurnstileFp sk(0.5, 0.25, 0.1, 100, 2, opts);
  for (int i = 0; i < 5; ++i) sk.update(1);
  CHECK_FALSE(sk.failed());
  CHECK(sk.query().has_value());
  sk.update(1);
  CHECK(sk.failed());
  CHECK_FALSE(sk.query().has_value());
}

TEST_CASE("query frequency consumes exactly its window") {
  Stream s = make_stream(10, {2, 2, 2, 2, 2, 2, 2, 2});
  StreamCursor cur(s);
  CHECK(query_frequency(2, 8, cur) == 8);
  CHECK(cur.consumed() == 8);
  CHECK(cur.remaining() == 0);

  Stream t = make_stream(10, {1, 2, 3, 2, 5});
  StreamCursor c2(t);
  CHECK(query_frequency(2, 4, c2) == 2);
  CHECK(c2.consumed() == 4);
  CHECK(query_frequency(9, 1, c2) == 0);  // absent
  CHECK(c2.consumed() == 5);

  // Window larger than what remains: consume the rest, report 0.
  Stream u = make_stream(10, {4, 4, 4});
  StreamCursor c3(u);
  CHECK(query_frequency(4, 7, c3) == 0);
  CHECK(c3.remaining() == 0);
}

TEST_CASE("query frequency rescale hits the target rate") {
  // f = m/10 with window m/4; rescaled count within (1 +- eps) f.
  const double eps = 0.25;
  const std::uint64_t m = 4000, f = 400, window = 1000;
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::PlantedHeavy;
  g.n = 5000;
  g.m = m;
  g.heavy_count = 1;
  g.heavy_freq = f;
  g.background = m - f;
  g.seed = 2;
  Stream base = generate(g);
  int good = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Stream s = shuffle(base, 80000 + t);
    StreamCursor cur(s);
    double count = static_cast<double>(query_frequency(1, window, cur));
    double rescaled = count * static_cast<double>(m) / static_cast<double>(window);
    if (std::abs(rescaled - double(f)) <= eps * double(f)) ++good;
  }
  CHECK(good >= static_cast<int>(0.85 * trials));
}
