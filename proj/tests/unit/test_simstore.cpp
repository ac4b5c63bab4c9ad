#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"
#include "gr/simstore/store.hpp"
#include "oracles.hpp"

using namespace gr;

namespace {

const Timestamp kNow = from_unix(1'718'000'000);

EmbeddingEntry entry(std::string org, std::string id, std::string hash, std::optional<Grade> grade,
                     std::vector<double> emb, Timestamp ts) {
  EmbeddingEntry e;
  e.org_id = std::move(org);
  e.incident_id = std::move(id);
  e.incident_hash = std::move(hash);
  e.grade = grade;
  e.embedding = std::move(emb);
  e.timestamp = ts;
  return e;
}

Timestamp ago(double d) { return kNow - Seconds{static_cast<std::int64_t>(d * 86400)}; }

// Entries drawn from a few orgs, hashes and embedding clusters so that every
// match kind shows up.
std::vector<EmbeddingEntry> random_entries(Rng& rng, std::size_t n, std::size_t k, std::size_t first_id = 0) {
  std::vector<std::vector<double>> centers(6, std::vector<double>(k));
  Rng crng(12345);
  for (auto& c : centers)
    for (auto& v : c) v = uniform_unit(crng) - 0.5;
  std::vector<EmbeddingEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[uniform_index(rng, centers.size())];
    std::vector<double> emb(k);
    for (std::size_t j = 0; j < k; ++j) emb[j] = c[j] + 0.15 * (uniform_unit(rng) - 0.5);
    std::optional<Grade> g;
    const auto gi = uniform_index(rng, 4);
    if (gi < 3) g = static_cast<Grade>(gi);
    auto e = entry("org" + std::to_string(uniform_index(rng, 3)), "inc" + std::to_string(first_id + i),
                   "h" + std::to_string(uniform_index(rng, 40)), g, std::move(emb),
                   ago(200.0 * uniform_unit(rng)));
    if (!g && uniform_index(rng, 2)) e.predicted_grade = static_cast<Grade>(uniform_index(rng, 3));
    out.push_back(std::move(e));
  }
  return out;
}

std::string tag(std::optional<Grade> g) { return g ? std::string(to_string(*g)) : "ungraded"; }

}  // namespace

TEST(Cosine, Basics) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, z{0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, z), 0.0);
}

TEST(Store, CapKeepsFiveNewest) {
  EmbeddingStore store("s", 2);
  std::vector<EmbeddingEntry> batch;
  for (int i = 0; i < 7; ++i) batch.push_back(entry("o", "i" + std::to_string(i), "h", Grade::TP, {1, 0}, ago(10 - i)));
  const auto r = store.upsert(batch, 5);
  EXPECT_EQ(r.evicted, 2u);
  EXPECT_EQ(store.size(), 5u);
  EXPECT_EQ(store.key_count("o", "h", Grade::TP), 5u);
  EXPECT_FALSE(store.get("o", "i0"));
  EXPECT_FALSE(store.get("o", "i1"));
  EXPECT_TRUE(store.get("o", "i6"));
  // A different grade is a different key.
  store.upsert({entry("o", "x", "h", Grade::FP, {1, 0}, ago(50))}, 5);
  EXPECT_EQ(store.size(), 6u);
}

TEST(Store, IdempotentUpsertAndReplacement) {
  EmbeddingStore store("s", 2);
  const auto e = entry("o", "i", "h", Grade::TP, {1, 2}, ago(1));
  store.upsert({e}, 5);
  const auto again = store.upsert({e}, 5);
  EXPECT_EQ(again.unchanged, 1u);
  EXPECT_EQ(store.size(), 1u);
  auto moved = e;
  moved.grade = Grade::BP;
  store.upsert({moved}, 5);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.key_count("o", "h", Grade::TP), 0u);
  EXPECT_EQ(store.get("o", "i")->grade, Grade::BP);
}

TEST(Store, UngradedAcceptedAndDimensionChecked) {
  EmbeddingStore store("s", 3);
  const auto r = store.upsert({entry("o", "u", "h", std::nullopt, {1, 2, 3}, ago(1)),
                               entry("o", "bad", "h", Grade::TP, {1, 2}, ago(1))},
                              5);
  EXPECT_EQ(r.accepted, 1u);
  EXPECT_EQ(r.rejected_dimension, 1u);
  EXPECT_EQ(store.key_count("o", "h", std::nullopt), 1u);
  SimilarQuery q;
  q.org_id = "o";
  q.embedding = {1, 2};
  q.now = kNow;
  EXPECT_THROW(store.find_similar(q), DimensionError);
}

TEST(Store, ExcludesSelfAndOtherOrgs) {
  EmbeddingStore store("s", 2);
  store.upsert({entry("o", "self", "h", Grade::TP, {1, 0}, ago(1)), entry("o", "peer", "h", Grade::TP, {1, 0}, ago(2)),
                entry("other", "far", "h", Grade::TP, {1, 0}, ago(1))},
               5);
  SimilarQuery q;
  q.org_id = "o";
  q.incident_id = "self";
  q.incident_hash = "h";
  q.embedding = {1, 0};
  q.grade_rec = Grade::TP;
  q.now = kNow;
  const auto m = store.find_similar(q);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].incident_id, "peer");
  EXPECT_EQ(m[0].kind, MatchKind::ExactHashSameGrade);
  EXPECT_DOUBLE_EQ(m[0].score, 1.0);
}

TEST(Store, ExactBeforeCosineAndCutoff) {
  EmbeddingStore store("s", 2);
  store.upsert({entry("o", "cos", "x", Grade::TP, {1, 0.01}, ago(1)),
                entry("o", "any", "h", Grade::FP, {0, 1}, ago(3)),
                entry("o", "same", "h", Grade::TP, {-1, 0}, ago(5)),
                entry("o", "weak", "y", Grade::TP, {1, 1}, ago(1))},
               5);
  SimilarQuery q;
  q.org_id = "o";
  q.incident_id = "q";
  q.incident_hash = "h";
  q.embedding = {1, 0};
  q.grade_rec = Grade::TP;
  q.now = kNow;
  const auto m = store.find_similar(q);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].incident_id, "same");
  EXPECT_EQ(m[1].incident_id, "any");
  EXPECT_EQ(m[1].kind, MatchKind::ExactHashAnyGrade);
  EXPECT_EQ(m[2].incident_id, "cos");
  EXPECT_EQ(m[2].kind, MatchKind::Cosine);
}

TEST(Store, PruneByHorizon) {
  EmbeddingStore store("s", 1);
  store.upsert({entry("o", "a", "h1", Grade::TP, {1}, ago(10)), entry("o", "b", "h2", Grade::TP, {1}, ago(179)),
                entry("o", "c", "h3", Grade::TP, {1}, ago(200))},
               5);
  EXPECT_EQ(store.prune(days(180), kNow), 1u);
  EXPECT_EQ(store.size(), 2u);
  store.upsert({entry("o", "d", "h4", Grade::TP, {1}, ago(181))}, 5);
  EXPECT_EQ(store.prune(days(180), kNow), 1u);
  EXPECT_FALSE(store.get("o", "d"));
}

TEST(Store, MatchesExhaustiveOracle) {
  Rng rng(2024);
  constexpr std::size_t k = 8;
  const auto all = random_entries(rng, 1000, k);
  EmbeddingStore store("s", k);
  store.upsert(all, 1000);  // no eviction: the oracle sees the same set
  ASSERT_EQ(store.size(), 1000u);
  std::size_t nonempty = 0;
  for (int t = 0; t < 100; ++t) {
    const auto& probe = all[uniform_index(rng, all.size())];
    SimilarQuery q;
    q.org_id = probe.org_id;
    q.incident_id = uniform_index(rng, 2) ? probe.incident_id : "fresh";
    q.incident_hash = uniform_index(rng, 3) ? probe.incident_hash : "h-none";
    q.embedding = probe.embedding;
    q.embedding[0] += 0.05 * (uniform_unit(rng) - 0.5);
    if (uniform_index(rng, 4)) q.grade_rec = static_cast<Grade>(uniform_index(rng, 3));
    q.cutoff = 0.9;
    q.now = kNow;
    const auto got = store.find_similar(q);
    const auto want = oracle::similar(all, q);
    ASSERT_EQ(got.size(), want.size()) << "query " << t;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].incident_id, want[i].incident_id);
      EXPECT_EQ(got[i].kind, want[i].kind);
      EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
    }
    nonempty += !got.empty();
  }
  EXPECT_GT(nonempty, 50u);
}

TEST(Store, RandomizedCapProperties) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    EmbeddingStore store("s", 4);
    // Reference: apply entries one at a time, trimming the touched key.
    std::map<std::string, EmbeddingEntry> model;  // org|id -> entry
    auto key_of = [](const EmbeddingEntry& e) { return e.org_id + "|" + e.incident_hash + "|" + tag(e.grade); };
    for (int round = 0; round < 10; ++round) {
      auto batch = random_entries(rng, 60, 4, uniform_index(rng, 300));
      store.upsert(batch, 5);
      for (auto& e : batch) {
        model[e.org_id + "|" + e.incident_id] = e;
        std::vector<std::string> members;
        for (const auto& [id, m] : model) {
          if (key_of(m) == key_of(e)) members.push_back(id);
        }
        std::sort(members.begin(), members.end(), [&](const auto& a, const auto& b) {
          const auto &x = model[a], &y = model[b];
          return x.timestamp != y.timestamp ? x.timestamp > y.timestamp : x.incident_id < y.incident_id;
        });
        for (std::size_t i = 5; i < members.size(); ++i) model.erase(members[i]);
      }
      EXPECT_LE(store.max_key_multiplicity(), 5u);
    }
    ASSERT_EQ(store.size(), model.size());
    for (const auto& [_, e] : model) {
      const auto got = store.get(e.org_id, e.incident_id);
      ASSERT_TRUE(got) << e.incident_id;
      EXPECT_EQ(*got, e);
    }
    store.prune(days(180), kNow);
    for (const auto& org : store.orgs()) {
      for (const auto& e : store.entries(org)) EXPECT_GE(e.timestamp, kNow - days(180));
    }
    SimilarQuery q;
    q.org_id = "org0";
    q.embedding = std::vector<double>(4, 0.1);
    q.now = kNow;
    q.cutoff = -1;
    EXPECT_LE(store.find_similar(q).size(), 5u);
  }
}

TEST(Store, SaveLoadRoundTrip) {
  fixture::TempDir dir;
  Rng rng(8);
  EmbeddingStore store("space-1", 6);
  store.upsert(random_entries(rng, 200, 6), 5);
  store.save(dir.path());
  const auto back = EmbeddingStore::load(dir.path());
  EXPECT_EQ(back.space_id(), "space-1");
  EXPECT_EQ(back.dimension(), 6u);
  EXPECT_EQ(back.orgs(), store.orgs());
  for (const auto& org : store.orgs()) EXPECT_EQ(back.entries(org), store.entries(org));
  const auto empty = EmbeddingStore::load(dir / "none");
  EXPECT_EQ(empty.size(), 0u);

  const auto bytes = serialize_partition("space-1", 6, store.entries("org0"));
  EXPECT_EQ(parse_partition(bytes, "space-1", 6), store.entries("org0"));
  EXPECT_THROW(parse_partition(bytes, "space-2", 6), Error);
  EXPECT_THROW(parse_partition(bytes.substr(0, bytes.size() - 3), "space-1", 6), Error);
}
