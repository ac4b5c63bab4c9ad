#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"
#include "gr/featurize/encoder.hpp"
#include "gr/featurize/feature_manifest.hpp"
#include "gr/featurize/incidents.hpp"
#include "oracles.hpp"

using namespace gr;

namespace {

std::vector<AlertRecord> stream_with_detectors(const std::map<std::string, int>& counts) {
  std::vector<AlertRecord> out;
  int n = 0;
  for (const auto& [det, c] : counts) {
    for (int i = 0; i < c; ++i) out.push_back(fixture::alert("a" + std::to_string(n++), "o", "i", det, 0));
  }
  return out;
}

double feature(const std::vector<double>& v, std::string_view name) {
  return v[feature_manifest_v1().index_of(name)];
}

}  // namespace

TEST(Manifest, SixtySevenFeatures) {
  EXPECT_EQ(feature_manifest_v1().size(), 67u);
  EXPECT_THROW(feature_manifest("v0"), ConfigError);
}

TEST(Manifest, EmptyEvidence) {
  const auto a = fixture::alert("a", "o", "i", "d", 1'700'000'000);
  const auto v = extract_numeric_features(a, feature_manifest_v1());
  ASSERT_EQ(v.size(), 67u);
  EXPECT_EQ(feature(v, "evidence_count"), 0.0);
  EXPECT_EQ(feature(v, "distinct_ip"), 0.0);
  EXPECT_EQ(feature(v, "distinct_account"), 0.0);
}

TEST(Manifest, DistinctIpCounting) {
  auto a = fixture::alert("a", "o", "i", "d", 1'700'000'000);
  for (const char* ip : {"1.1.1.1", "2.2.2.2", "1.1.1.1"}) {
    auto e = fixture::evidence(EntityType::Ip);
    e.set_attr(EvidenceAttr::IpAddress, ip);
    a.evidence.push_back(e);
  }
  const auto v = extract_numeric_features(a, feature_manifest_v1());
  EXPECT_EQ(feature(v, "evidence_count"), 3.0);
  EXPECT_EQ(feature(v, "distinct_ip"), 2.0);
  EXPECT_EQ(feature(v, "entity_Ip"), 3.0);
  for (double x : v) EXPECT_TRUE(std::isfinite(x));
}

TEST(Encoder, CountThreshold) {
  const auto alerts = stream_with_detectors({{"a", 12}, {"b", 10}, {"d", 9}});
  const auto enc = fit_encoder(alerts, 10);
  const auto vocab = enc.vocabulary(CategoricalColumn::Detector);
  EXPECT_EQ(std::vector<std::string>(vocab.begin(), vocab.end()), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(enc.index_of(CategoricalColumn::Detector, "d"), enc.generic_index(CategoricalColumn::Detector));
  EXPECT_NE(enc.index_of(CategoricalColumn::Detector, "a"), enc.generic_index(CategoricalColumn::Detector));
}

TEST(Encoder, NineSightingsMapToGeneric) {
  const auto enc = fit_encoder(stream_with_detectors({{"rare", 9}, {"common", 30}}), 10);
  EXPECT_EQ(enc.index_of(CategoricalColumn::Detector, "rare"), enc.generic_index(CategoricalColumn::Detector));
}

TEST(Encoder, ThresholdOneKeepsEverything) {
  const auto enc = fit_encoder(stream_with_detectors({{"x", 1}, {"y", 2}, {"z", 3}}), 1);
  EXPECT_EQ(enc.vocabulary(CategoricalColumn::Detector).size(), 3u);
}

TEST(Encoder, DimensionFormulaAndUnseenValues) {
  auto alerts = stream_with_detectors({{"a", 12}, {"b", 10}});
  const auto enc = fit_encoder(alerts, 10);
  std::size_t expected = 0;
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    expected += enc.vocabulary(static_cast<CategoricalColumn>(c)).size() + 1;
  }
  EXPECT_EQ(enc.one_hot_dimension(), expected);
  EXPECT_EQ(enc.dimension(), expected + 67);

  AlertRecord cold = fixture::alert("new", "unseen-org", "i", "unseen-det", 0);
  cold.product_id = "?";
  cold.category = "?";
  cold.severity = 3;
  cold.alert_title = "?";
  const auto e = enc.encode(cold);
  ASSERT_EQ(e.one_hot.size(), 6u);
  for (std::size_t c = 0; c < kCategoricalColumnCount; ++c) {
    EXPECT_EQ(e.one_hot[c], enc.generic_index(static_cast<CategoricalColumn>(c)));
  }
  const auto known = enc.encode(alerts[0]);
  EXPECT_EQ(known.one_hot[1], enc.index_of(CategoricalColumn::Detector, "a"));
  EXPECT_EQ(enc.feature_vector(known).to_dense(enc.dimension()).size(), enc.dimension());
}

TEST(Encoder, SerializationRoundTrip) {
  const auto enc = fit_encoder(stream_with_detectors({{"a", 12}, {"b", 10}, {"c", 3}}), 2);
  EXPECT_EQ(EncoderModel::parse(enc.serialize()), enc);
  EXPECT_THROW(fit_encoder({}, 10), DataError);
  EXPECT_THROW(fit_encoder(stream_with_detectors({{"a", 1}}), 0), ConfigError);
}

TEST(MajorityGrade, Examples) {
  using G = std::optional<Grade>;
  std::vector<G> tp_fp{Grade::TP, Grade::FP};
  EXPECT_EQ(majority_grade(tp_fp), Grade::TP);
  std::vector<G> bp{Grade::BP};
  EXPECT_EQ(majority_grade(bp), Grade::BP);
  std::vector<G> ffb{Grade::FP, Grade::FP, Grade::BP};
  EXPECT_EQ(majority_grade(ffb), Grade::FP);
  std::vector<G> none{std::nullopt};
  EXPECT_EQ(majority_grade(none), std::nullopt);
}

TEST(MajorityGrade, ExhaustiveUpToFive) {
  for (std::size_t tp = 0; tp <= 5; ++tp)
    for (std::size_t fp = 0; tp + fp <= 5; ++fp)
      for (std::size_t bp = 0; tp + fp + bp <= 5; ++bp) {
        std::vector<Grade> grades;
        grades.insert(grades.end(), tp, Grade::TP);
        grades.insert(grades.end(), fp, Grade::FP);
        grades.insert(grades.end(), bp, Grade::BP);
        EXPECT_EQ(majority_grade(std::array<std::size_t, 3>{tp, fp, bp}), oracle::majority(grades))
            << tp << "/" << fp << "/" << bp;
      }
}

TEST(IncidentHash, ShaOfJoinedSortedSet) {
  EXPECT_EQ(incident_hash(std::vector<std::string>{}), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  const std::vector<std::string> a{"d2", "d1"}, b{"d1", "d2", "d2"};
  EXPECT_EQ(incident_hash(a), incident_hash(b));
  // hashlib.sha1(b"d1|d2").hexdigest()
  EXPECT_EQ(incident_hash(a), sha1_hex("d1|d2"));
  EXPECT_EQ(incident_hash(a), "ea363040d3d8eb0d8857632fafb70b1cf0c5e8a0");
}

TEST(FormIncidents, SumsMembersAndUsesMajority) {
  std::vector<AlertRecord> alerts{fixture::alert("1", "o", "i1", "d1", 100, Grade::FP),
                                  fixture::alert("2", "o", "i1", "d2", 300, Grade::FP),
                                  fixture::alert("3", "o", "i1", "d1", 200, Grade::BP),
                                  fixture::alert("4", "o", "i2", "d1", 50)};
  const auto enc = fit_encoder(alerts, 1);
  std::vector<EncodedAlert> encoded;
  for (const auto& a : alerts) encoded.push_back(enc.encode(a));
  const auto all = form_incidents(encoded, false);
  ASSERT_EQ(all.size(), 2u);
  const auto& i1 = all[0];
  EXPECT_EQ(i1.grade, Grade::FP);
  EXPECT_EQ(i1.alert_ids.size(), 3u);
  EXPECT_EQ(i1.detector_set, (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(i1.incident_hash, sha1_hex("d1|d2"));
  EXPECT_EQ(i1.latest, from_unix(300));
  for (std::size_t f = 0; f < i1.numeric.size(); ++f) {
    double sum = 0;
    for (int m = 0; m < 3; ++m) sum += encoded[m].numeric[f];
    EXPECT_DOUBLE_EQ(i1.numeric[f], sum);
  }
  const auto det_index = enc.index_of(CategoricalColumn::Detector, "d1");
  for (const auto& [idx, count] : i1.one_hot_counts) {
    if (idx == det_index) {
      EXPECT_EQ(count, 2.0);
    }
  }
  EXPECT_EQ(form_incidents(encoded, true).size(), 1u);
}

TEST(SampleIncidents, CapPerKey) {
  std::vector<IncidentRecord> incidents;
  for (int i = 0; i < 1500; ++i) {
    IncidentRecord r;
    r.org_id = "o";
    r.incident_id = std::to_string(i);
    r.incident_hash = "h";
    r.grade = Grade::TP;
    incidents.push_back(r);
  }
  for (int i = 0; i < 3; ++i) {
    IncidentRecord r;
    r.org_id = "o";
    r.incident_id = "small" + std::to_string(i);
    r.incident_hash = "h2";
    r.grade = Grade::TP;
    incidents.push_back(r);
  }
  const auto a = sample_incidents(incidents, 1000, 5);
  std::map<std::string, int> per_key;
  for (const auto& r : a) ++per_key[r.incident_hash];
  EXPECT_EQ(per_key["h"], 1000);
  EXPECT_EQ(per_key["h2"], 3);
  const auto b = sample_incidents(incidents, 1000, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].incident_id, b[i].incident_id);
  EXPECT_THROW(sample_incidents(incidents, 0, 5), ConfigError);
}
