#include <doctest.h>

#include <cmath>

#include "afpb/dataset.hpp"
#include "afpb/error.hpp"
#include "afpb/evaluate.hpp"
#include "oracles.hpp"

using namespace afpb;

TEST_CASE("l2_distance") {
  const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0};
  CHECK(l2_distance(a, b) == 5.0);
  CHECK(l2_distance(b, b) == 0.0);
  const std::vector<double> c{1.0};
  try {
    l2_distance(a, c);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("rank_identities orders by score with label tie-break") {
  FeatureGallery g;
  g[7] = {{1.0}};
  g[3] = {{-1.0}};
  g[5] = {{4.0}, {0.5}};
  const std::vector<double> probe{0.0};
  CHECK(rank_identities(probe, g) == std::vector<int>{5, 3, 7});  // 0.5 < 1 = 1, 3 before 7
  // Mean rule: identity 5 averages 4 and 0.5.
  CHECK(rank_identities(probe, g, MultiShotRule::Mean) == std::vector<int>{3, 7, 5});
}

TEST_CASE("cmc_curve hand-computed case") {
  FeatureGallery g{{1, {{0.0}}}, {2, {{10.0}}}, {3, {{20.0}}}};
  const std::vector<ProbeFeature> probes{{{1.0}, 1}, {{12.0}, 3}, {{19.0}, 3}, {{15.0}, 1}};
  // Probe ranks: 1, 2 (identity 2 is closer), 1, 3 (identities 2 and 3 both closer).
  const EvalReport r = cmc_curve(probes, g, 1);
  REQUIRE(r.cmc.size() == 3);
  CHECK(r.cmc[0] == 0.5);
  CHECK(r.cmc[1] == 0.75);
  CHECK(r.cmc[2] == 1.0);
  CHECK(r.rank1 == 50.0);
  CHECK(r.rank5 == 100.0);
  CHECK(r.rank10 == 100.0);
  CHECK(r.probes == 4);

  const std::vector<ProbeFeature> stranger{{{0.0}, 9}};
  try {
    cmc_curve(stranger, g, 1);
    FAIL("expected UnknownProbeIdentity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownProbeIdentity);
  }
}

TEST_CASE("cmc_curve matches brute force with ties") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int ids = static_cast<int>(rng.uniform_int(1, 5));
    const int shots = static_cast<int>(rng.uniform_int(1, 3));
    FeatureGallery g;
    std::map<int, std::vector<std::vector<double>>> oracle_gallery;
    for (int id = 1; id <= ids; ++id)
      for (int s = 0; s < shots; ++s) {
        // Coarse integer coordinates make exact ties common.
        std::vector<double> f{static_cast<double>(rng.uniform_int(0, 2)), static_cast<double>(rng.uniform_int(0, 2))};
        g[id * 2].push_back(f);
        oracle_gallery[id * 2].push_back(f);
      }
    std::vector<ProbeFeature> probes;
    std::vector<std::pair<std::vector<double>, int>> oracle_probes;
    const int n = static_cast<int>(rng.uniform_int(1, 6));
    for (int i = 0; i < n; ++i) {
      std::vector<double> f{static_cast<double>(rng.uniform_int(0, 2)), static_cast<double>(rng.uniform_int(0, 2))};
      const int label = 2 * static_cast<int>(rng.uniform_int(1, ids));
      probes.push_back({f, label});
      oracle_probes.emplace_back(f, label);
    }
    REQUIRE(cmc_curve(probes, g, shots).cmc == oracle::brute_force_cmc(oracle_probes, oracle_gallery));
  }
}

TEST_CASE("fill_rank_summary and average_reports") {
  EvalReport a, b;
  a.cmc = {0.2, 0.6};
  b.cmc = {0.4, 1.0};
  a.trial_seeds = {1};
  b.trial_seeds = {2};
  const std::vector<EvalReport> both{a, b};
  const EvalReport m = average_reports(both);
  CHECK(m.cmc[0] == doctest::Approx(0.3));
  CHECK(m.cmc[1] == doctest::Approx(0.8));
  CHECK(m.rank1 == doctest::Approx(30.0));
  CHECK(m.rank5 == doctest::Approx(80.0));  // gallery of 2: rank 5 reads the last point
  CHECK(m.trial_seeds == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("evaluate is deterministic and independent of jobs") {
  SyntheticConfig sc;
  sc.identities = 4;
  sc.per_identity = 4;
  Rng rng(6);
  auto data = generate_synthetic_dataset(sc, rng);
  // Half of each identity becomes a probe via a simple occluded flag.
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i % 4 == 3) data[i].occlusion = Occlusion::ArtificialOcclusion;
  Rng init(2);
  const ModelParams p = ModelParams::init(ArchSpec{}, 2, init);
  const EvalReport a = evaluate(p, data, 2, 3, 99);
  const EvalReport b = evaluate(p, data, 2, 3, 99, {MultiShotRule::Min, 3});
  CHECK(a.cmc == b.cmc);
  CHECK(a.trials == 3);
  CHECK(a.shots == 2);
  CHECK(a.probes == 4);
  REQUIRE(a.trial_seeds.size() == 3);
  CHECK(a.trial_seeds[1] == derive_seed(99, 1));
  REQUIRE(a.trial_records.size() == 3);
  CHECK(a.trial_records[0].gallery_ids.size() == 8);
  CHECK(a.cmc.size() == 4);
  CHECK(a.cmc.back() == 1.0);
  for (std::size_t i = 1; i < a.cmc.size(); ++i) CHECK(a.cmc[i] >= a.cmc[i - 1]);
}
