#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "hdfuse/encoder.hpp"
#include "oracles.hpp"

using namespace hdfuse;

namespace {

Hypervector rand_hv(int dim, std::uint64_t seed) {
  WordRng rng(seed);
  return Hypervector::random(dim, rng);
}

ChannelVectorSet rand_set(int dim, std::uint64_t seed) {
  WordRng rng(seed);
  ChannelVectorSet s;
  s.im = Hypervector::random(dim, rng);
  s.pfp = Hypervector::random(dim, rng);
  s.nfp = Hypervector::random(dim, rng);
  return s;
}

}  // namespace

TEST_CASE("select_fp picks by sign with zero mapping to positive") {
  const auto s = rand_set(64, 1);
  REQUIRE(select_fp(s, 0.7) == s.pfp);
  REQUIRE(select_fp(s, -0.3) == s.nfp);
  REQUIRE(select_fp(s, 0.0) == s.pfp);
}

TEST_CASE("encode_channel binds iM with the selected FP") {
  const auto s = rand_set(256, 2);
  const auto enc = encode_channel(s, 0.4);
  REQUIRE(bind(enc, s.pfp) == s.im);  // bind involution recovers iM
  REQUIRE(encode_channel(s, 0.2) == encode_channel(s, 0.9));
  REQUIRE_FALSE(encode_channel(s, 0.2) == encode_channel(s, -0.2));
}

TEST_CASE("distinct channel sets give pseudo-orthogonal encodings") {
  const auto a = rand_set(10000, 3);
  const auto b = rand_set(10000, 4);
  const double d = normalized_hamming(encode_channel(a, 0.5), encode_channel(b, 0.5));
  REQUIRE(d >= 0.45);
  REQUIRE(d <= 0.55);
}

TEST_CASE("encode_modality basics") {
  const auto t = rand_hv(256, 5);
  SECTION("single channel is the channel encoding") {
    const auto s = rand_set(256, 6);
    const std::vector<ChannelVectorSet> sets{s};
    const std::vector<double> values{0.3};
    REQUIRE(encode_modality(sets, values, t) == encode_channel(s, 0.3));
  }
  SECTION("a duplicated pair dominates the majority") {
    const auto s1 = rand_set(256, 7);
    const auto s2 = rand_set(256, 8);
    const std::vector<ChannelVectorSet> sets{s1, s1, s2};
    const std::vector<double> values{0.1, 0.1, 0.1};
    REQUIRE(encode_modality(sets, values, t) == encode_channel(s1, 0.1));
  }
  SECTION("empty modality is a usage error") {
    REQUIRE_THROWS_AS(encode_modality({}, {}, t), UsageError);
  }
}

TEST_CASE("bundles stay closer to constituents than to fresh random vectors") {
  std::mt19937_64 gen(9);
  const auto t = rand_hv(10000, 10);
  for (int k : {3, 9, 17, 33}) {
    BundleAccumulator acc(10000);
    std::vector<Hypervector> members;
    for (int i = 0; i < k; ++i) {
      members.push_back(rand_hv(10000, gen()));
      acc.accumulate(members.back());
    }
    const auto bundled = bundle_finalize(acc, t);
    const auto fresh = rand_hv(10000, gen());
    for (const auto& m : members) REQUIRE(hamming(bundled, m) < hamming(bundled, fresh));
  }
}

TEST_CASE("fuse_early basics") {
  const auto t = rand_hv(256, 11);
  const auto a = rand_hv(256, 12);
  const auto b = rand_hv(256, 13);
  const auto c = rand_hv(256, 14);

  const std::vector<Hypervector> one{a};
  REQUIRE(fuse_early(one, t) == a);

  const std::vector<Hypervector> abc{a, b, c};
  const std::vector<Hypervector> cba{c, b, a};
  REQUIRE(fuse_early(abc, t) == fuse_early(cba, t));

  const std::vector<Hypervector> aaa{a, a, a};
  REQUIRE(fuse_early(aaa, t) == a);
}

TEST_CASE("temporal encoder follows the n-gram expansion") {
  const auto a = rand_hv(256, 15);
  const auto b = rand_hv(256, 16);
  const auto c = rand_hv(256, 17);

  SECTION("n=1 is the identity at every step") {
    NgramState st(1);
    REQUIRE(st.push(a).value() == a);
    REQUIRE(st.push(b).value() == b);
  }
  SECTION("n=3 emits bind(c, rot1(b), rot2(a)) at step 3") {
    NgramState st(3);
    REQUIRE_FALSE(st.push(a).has_value());
    REQUIRE_FALSE(st.push(b).has_value());
    const auto te = st.push(c);
    REQUIRE(te.has_value());
    REQUIRE(*te == bind(bind(c, permute(b, 1)), permute(a, 2)));
  }
  SECTION("constant input is stationary") {
    NgramState st(3);
    st.push(a);
    st.push(a);
    const auto te1 = st.push(a);
    const auto te2 = st.push(a);
    const auto expect = bind(bind(a, permute(a, 1)), permute(a, 2));
    REQUIRE(*te1 == expect);
    REQUIRE(*te2 == expect);
  }
  SECTION("invalid n") { REQUIRE_THROWS_AS(NgramState(0), UsageError); }
}

TEST_CASE("temporal output depends on exactly the last N samples") {
  std::mt19937_64 gen(18);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 3);
    std::vector<Hypervector> seq;
    for (int i = 0; i < n + 2; ++i) seq.push_back(rand_hv(128, gen()));
    auto altered = seq;
    altered[1] = rand_hv(128, gen());  // index 1 falls outside the final window

    NgramState s1(n), s2(n);
    std::optional<Hypervector> last1, last2;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      last1 = s1.push(seq[i]);
      last2 = s2.push(altered[i]);
    }
    // final window covers indices [seq.size()-n, seq.size())
    REQUIRE(seq.size() - static_cast<std::size_t>(n) > 1);
    REQUIRE(*last1 == *last2);
  }
}

TEST_CASE("early fusion pipeline degenerates to encode_channel for n=m=k=1") {
  DatasetLayout layout{{{"A", 1}}};
  auto provider = make_provider({Strategy::kUnoptimized}, layout, 256, 33);
  const auto t = rand_hv(256, 34);
  NgramState st(1);
  const std::vector<double> values{0.8};
  const auto enc = encode_sample_early(*provider, layout, {values, 1, 0}, t, st);
  REQUIRE(enc.has_value());
  provider->begin_pass();
  REQUIRE(enc->vec == encode_channel(provider->get_channel_set(0), 0.8));
  REQUIRE(enc->label == 1);
}

TEST_CASE("early fusion pipeline is deterministic and shape-correct") {
  const auto layout = DatasetLayout::amigos();
  const int dim = 10000;
  std::mt19937_64 gen(35);
  std::vector<std::vector<double>> samples;
  for (int j = 0; j < 4; ++j) {
    std::vector<double> v(static_cast<std::size_t>(layout.total_channels()));
    for (auto& x : v) x = static_cast<double>(gen() % 2000) / 1000.0 - 1.0;
    samples.push_back(std::move(v));
  }

  const auto run_once = [&](Strategy s) {
    auto provider = make_provider({s}, layout, dim, 36);
    const auto t = rand_hv(dim, 37);
    NgramState st(3);
    std::vector<Hypervector> out;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      auto enc = encode_sample_early(*provider, layout, {samples[j], 0, static_cast<int>(j)}, t, st);
      if (enc) out.push_back(enc->vec);
    }
    return out;
  };

  const auto o1 = run_once(Strategy::kRule90);
  const auto o2 = run_once(Strategy::kRule90);
  REQUIRE(o1 == o2);
  REQUIRE(o1.size() == 2);  // 4 samples, warm-up of N-1 = 2
  for (const auto& v : o1) REQUIRE(v.dim() == dim);
}

TEST_CASE("sign-only encoding: magnitudes do not matter") {
  DatasetLayout layout{{{"A", 3}, {"B", 5}}};
  auto p1 = make_provider({Strategy::kUnoptimized}, layout, 512, 40);
  auto p2 = make_provider({Strategy::kUnoptimized}, layout, 512, 40);
  const auto t = rand_hv(512, 41);
  std::mt19937_64 gen(42);
  NgramState s1(2), s2(2);
  for (int j = 0; j < 6; ++j) {
    std::vector<double> values(8), signs(8);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<double>(gen() % 2001) / 1000.0 - 1.0;
      signs[i] = values[i] >= 0 ? 0.5 : -0.5;
    }
    const auto e1 = encode_sample_early(*p1, layout, {values, 0, j}, t, s1);
    const auto e2 = encode_sample_early(*p2, layout, {signs, 0, j}, t, s2);
    REQUIRE(e1.has_value() == e2.has_value());
    if (e1) REQUIRE(e1->vec == e2->vec);
  }
}

TEST_CASE("early fusion is invariant to modality reorder and channel reorder") {
  // build explicit sets so the reordered run uses the same vectors
  const int dim = 512;
  std::mt19937_64 gen(50);
  std::vector<ChannelVectorSet> mod_a, mod_b;
  std::vector<double> val_a, val_b;
  for (int i = 0; i < 4; ++i) {
    mod_a.push_back(rand_set(dim, gen()));
    val_a.push_back(i % 2 == 0 ? 0.4 : -0.7);
  }
  for (int i = 0; i < 3; ++i) {
    mod_b.push_back(rand_set(dim, gen()));
    val_b.push_back(i % 2 == 0 ? -0.1 : 0.9);
  }
  const auto t = rand_hv(dim, gen());

  const auto va = encode_modality(mod_a, val_a, t);
  const auto vb = encode_modality(mod_b, val_b, t);
  const std::vector<Hypervector> fwd{va, vb}, rev{vb, va};
  REQUIRE(fuse_early(fwd, t) == fuse_early(rev, t));

  // reorder (channel, value) pairs together within a modality
  std::vector<std::size_t> idx{2, 0, 3, 1};
  std::vector<ChannelVectorSet> shuffled_sets;
  std::vector<double> shuffled_vals;
  for (auto i : idx) {
    shuffled_sets.push_back(mod_a[i]);
    shuffled_vals.push_back(val_a[i]);
  }
  REQUIRE(encode_modality(shuffled_sets, shuffled_vals, t) == va);
}

TEST_CASE("late fusion equals early fusion for a single modality") {
  DatasetLayout layout{{{"A", 4}}};
  auto p1 = make_provider({Strategy::kUnoptimized}, layout, 256, 60);
  auto p2 = make_provider({Strategy::kUnoptimized}, layout, 256, 60);
  const auto t = rand_hv(256, 61);
  NgramState early(3);
  std::vector<NgramState> late{NgramState(3)};
  std::mt19937_64 gen(62);
  for (int j = 0; j < 6; ++j) {
    std::vector<double> values(4);
    for (auto& x : values) x = static_cast<double>(gen() % 2001) / 1000.0 - 1.0;
    const auto e = encode_sample_early(*p1, layout, {values, 0, j}, t, early);
    const auto l = encode_sample_late(*p2, layout, {values, 0, j}, t, late);
    REQUIRE(e.has_value() == l.has_value());
    if (e) REQUIRE(e->vec == l->vec);
  }
}

TEST_CASE("late fusion with n=1 everywhere equals early fusion with n=1") {
  DatasetLayout layout{{{"A", 2}, {"B", 3}, {"C", 2}}};
  auto p1 = make_provider({Strategy::kSharedIm}, layout, 256, 63);
  auto p2 = make_provider({Strategy::kSharedIm}, layout, 256, 63);
  const auto t = rand_hv(256, 64);
  NgramState early(1);
  std::vector<NgramState> late{NgramState(1), NgramState(1), NgramState(1)};
  std::mt19937_64 gen(65);
  for (int j = 0; j < 4; ++j) {
    std::vector<double> values(7);
    for (auto& x : values) x = static_cast<double>(gen() % 2001) / 1000.0 - 1.0;
    const auto e = encode_sample_early(*p1, layout, {values, 0, j}, t, early);
    const auto l = encode_sample_late(*p2, layout, {values, 0, j}, t, late);
    REQUIRE(e.has_value());
    REQUIRE(l.has_value());
    REQUIRE(e->vec == l->vec);
  }
}

TEST_CASE("late fusion with per-modality n=4 emits from the fourth sample") {
  const auto layout = DatasetLayout::amigos();
  auto provider = make_provider({Strategy::kSharedFp}, layout, 256, 70);
  const auto t = rand_hv(256, 71);
  std::vector<NgramState> states{NgramState(4), NgramState(4), NgramState(4)};
  std::mt19937_64 gen(72);
  int emitted_at = -1;
  for (int j = 0; j < 6; ++j) {
    std::vector<double> values(static_cast<std::size_t>(layout.total_channels()));
    for (auto& x : values) x = static_cast<double>(gen() % 2001) / 1000.0 - 1.0;
    const auto l = encode_sample_late(*provider, layout, {values, 0, j}, t, states);
    if (l && emitted_at < 0) emitted_at = j;
    REQUIRE(l.has_value() == (j >= 3));
  }
  REQUIRE(emitted_at == 3);
}
