#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "smoments/generator.hpp"
#include "smoments/stream.hpp"
#include "smoments/stream_io.hpp"

using namespace smoments;

namespace {

Stream make_stream(std::uint64_t n, std::vector<ItemId> updates) {
  Stream s;
  s.universe = n;
  s.updates = std::move(updates);
  return s;
}

}  // namespace

TEST_CASE("exact moment basics") {
  Stream s = make_stream(4, {1, 1, 2});
  CHECK(exact_moment(s, 2.0) == doctest::Approx(5.0));
  CHECK(exact_moment(s, 0.0) == doctest::Approx(2.0));
  CHECK(exact_moment(s, 1.0) == doctest::Approx(3.0));

  Stream empty = make_stream(4, {});
  CHECK(exact_moment(empty, 2.0) == 0.0);
  CHECK(exact_moment(empty, 0.0) == 0.0);
  CHECK(exact_moment(empty, 0.5) == 0.0);
}

TEST_CASE("negative frequency with non-integer p is a domain error") {
  WeightedStream w;
  w.universe = 2;
  w.updates = {{1, 1.0}, {1, -3.0}};
  CHECK(exact_moment(w, 2.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(exact_moment(w, 0.5), std::domain_error);
}

TEST_CASE("weighted embedding of insertion stream") {
  Stream s = make_stream(8, {3, 3, 5});
  WeightedStream w = WeightedStream::from(s);
  for (double p : {0.0, 0.5, 1.0, 2.0})
    CHECK(exact_moment(w, p) == doctest::Approx(exact_moment(s, p)));
}

TEST_CASE("shuffle keeps the multiset and is seed-reproducible") {
  Stream s = make_stream(10, {7});
  CHECK(shuffle(s, 123).updates == std::vector<ItemId>{7});

  Stream big = make_stream(50, {});
  SplitMix64 gen(99);
  for (int i = 0; i < 200; ++i) big.updates.push_back(gen.next_below(50) + 1);

  Stream a = shuffle(big, 42);
  Stream b = shuffle(big, 42);
  CHECK(a.updates == b.updates);

  auto sorted = [](Stream t) {
    std::sort(t.updates.begin(), t.updates.end());
    return t.updates;
  };
  CHECK(sorted(a) == sorted(big));

  for (double p : {0.0, 0.5, 1.0, 1.5, 2.0})
    CHECK(exact_moment(a, p) == doctest::Approx(exact_moment(big, p)));
}

TEST_CASE("shuffle permutation frequencies match multinomial within 3 sigma") {
  Stream s = make_stream(3, {1, 2, 3});
  std::map<std::vector<ItemId>, int> counts;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) counts[shuffle(s, 1000 + t).updates] += 1;
  CHECK(counts.size() == 6);
  double expect = trials / 6.0;
  double sigma = std::sqrt(trials * (1.0 / 6.0) * (5.0 / 6.0));
  for (const auto& [perm, c] : counts)
    CHECK(std::abs(c - expect) <= 3.0 * sigma);
}

TEST_CASE("slice and induce") {
  Stream s = make_stream(5, {1, 2, 1, 3});

  Stream ind = induce(s, [](ItemId a) { return a == 1 || a == 3; });
  CHECK(ind.updates == std::vector<ItemId>{1, 1, 3});

  auto whole = slice(s, 1, s.updates.size());
  CHECK(whole.materialize().updates == s.updates);

  auto mid = slice(s, 2, 3);
  CHECK(mid.materialize().updates == std::vector<ItemId>{2, 1});

  CHECK_THROWS_AS(slice(s, 0, 2), std::out_of_range);
  CHECK_THROWS_AS(slice(s, 3, 2), std::out_of_range);
  CHECK_THROWS_AS(slice(s, 1, 5), std::out_of_range);

  // Partition: matching + non-matching lengths add up to m.
  auto pred = [](ItemId a) { return a % 2 == 1; };
  double f1 = exact_moment(induce(s, pred), 1.0);
  double f2 = exact_moment(induce(s, [&](ItemId a) { return !pred(a); }), 1.0);
  CHECK(f1 + f2 == doctest::Approx(double(s.updates.size())));
}

TEST_CASE("planted heavy generator meets its profile exactly") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::PlantedHeavy;
  g.n = 100;
  g.m = 100;
  g.heavy_count = 1;
  g.heavy_freq = 50;
  g.background = 50;
  g.seed = 7;
  Stream s = generate(g);
  CHECK(s.updates.size() == 100);
  CHECK(exact_moment(s, 2.0) == doctest::Approx(2550.0));  // 50^2 + 50

  g.background = 49;
  CHECK_THROWS_AS(generate(g), std::invalid_argument);
}

TEST_CASE("uniform generator with a single item") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::Uniform;
  g.n = 1;
  g.m = 25;
  g.seed = 3;
  Stream s = generate(g);
  for (ItemId a : s.updates) CHECK(a == 1);
}

TEST_CASE("zipf rank-frequency slope is about -1") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::Zipf;
  g.n = 1000;
  g.m = 100000;
  g.skew = 1.0;
  g.seed = 11;
  Stream s = generate(g);
  CHECK(s.updates.size() == g.m);

  FrequencyVector fv(s);
  std::vector<double> freqs;
  for (std::uint64_t i = 1; i <= g.n; ++i)
    if (fv.count(i) > 0) freqs.push_back(fv.count(i));
  std::sort(freqs.begin(), freqs.end(), std::greater<double>());

  // Least-squares slope of log f against log rank.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = freqs.size();
  for (std::size_t i = 0; i < cnt; ++i) {
    double x = std::log(static_cast<double>(i + 1));
    double y = std::log(freqs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("generator determinism per seed") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::Zipf;
  g.n = 64;
  g.m = 500;
  g.seed = 21;
  CHECK(generate(g).updates == generate(g).updates);
  g.seed = 22;
  Stream other = generate(g);
  CHECK(other.updates != generate(GeneratorSpec{g.kind, 64, 500, 21, 1.0}).updates);
}

TEST_CASE("stream file round trips") {
  GeneratorSpec g;
  g.kind = GeneratorSpec::Kind::Zipf;
  g.n = 30;
  g.m = 200;
  g.seed = 5;
  Stream s = generate(g);

  write_stream_binary(s, "roundtrip.rstrm");
  Stream rb = read_stream("roundtrip.rstrm");
  CHECK(rb.universe == s.universe);
  CHECK(rb.updates == s.updates);

  write_stream_text(s, "roundtrip.txt");
  Stream rt = read_stream("roundtrip.txt", s.universe);
  CHECK(rt.universe == s.universe);
  CHECK(rt.updates == s.updates);
}
