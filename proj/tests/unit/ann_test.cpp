#include <doctest.h>

#include <set>

#include "sroc/ann.hpp"
#include "sroc/error.hpp"
#include "sroc/random.hpp"
#include "support.hpp"

using namespace sroc;
using namespace sroc::testing;

namespace {

VectorBank make_bank(FloatMatrix vectors) {
  VectorBank bank;
  bank.payload_ids.resize(vectors.rows);
  for (std::size_t r = 0; r < vectors.rows; ++r) bank.payload_ids[r] = {static_cast<std::uint32_t>(r), -1, -1};
  bank.vectors = std::move(vectors);
  return bank;
}

std::set<std::size_t> rows_of(const std::vector<Neighbor>& found) {
  std::set<std::size_t> out;
  for (const auto& n : found) out.insert(n.row);
  return out;
}

}  // namespace

TEST_CASE("kmeans_fit") {
  Rng rng(1);
  SUBCASE("M = k distinct points") {
    const FloatMatrix pts = random_matrix(rng, 6, 3);
    const KMeansResult r = kmeans_fit(pts, 6, 4);
    CHECK(r.inertia == 0.0);
    std::multiset<std::vector<double>> want, got;
    for (std::size_t k = 0; k < 6; ++k) {
      want.insert({pts(k, 0), pts(k, 1), pts(k, 2)});
      got.insert({r.centroids(k, 0), r.centroids(k, 1), r.centroids(k, 2)});
    }
    CHECK(want == got);
  }
  SUBCASE("two separated blobs") {
    FloatMatrix pts(400, 2);
    for (std::size_t r = 0; r < 400; ++r) {
      const double cx = r < 200 ? -10.0 : 10.0;
      pts(r, 0) = static_cast<float>(cx + 0.5 * rng.normal());
      pts(r, 1) = static_cast<float>(3.0 + 0.5 * rng.normal());
    }
    double mean_a[2] = {0, 0}, mean_b[2] = {0, 0};
    for (std::size_t r = 0; r < 400; ++r) {
      double* m = r < 200 ? mean_a : mean_b;
      m[0] += pts(r, 0) / 200.0;
      m[1] += pts(r, 1) / 200.0;
    }
    const KMeansResult res = kmeans_fit(pts, 2, 9);
    const std::size_t a = res.centroids(0, 0) < 0 ? 0 : 1;
    CHECK(std::abs(res.centroids(a, 0) - mean_a[0]) < 0.1);
    CHECK(std::abs(res.centroids(a, 1) - mean_a[1]) < 0.1);
    CHECK(std::abs(res.centroids(1 - a, 0) - mean_b[0]) < 0.1);
    CHECK(std::abs(res.centroids(1 - a, 1) - mean_b[1]) < 0.1);
  }
  SUBCASE("deterministic per seed") {
    const FloatMatrix pts = random_matrix(rng, 300, 5);
    CHECK(kmeans_fit(pts, 7, 42).centroids == kmeans_fit(pts, 7, 42).centroids);
  }
  SUBCASE("duplicates force reseeding without empty clusters") {
    FloatMatrix pts(10, 1);
    for (std::size_t r = 0; r < 10; ++r) pts(r, 0) = r < 8 ? 0.0f : static_cast<float>(r);
    const KMeansResult res = kmeans_fit(pts, 3, 1);
    CHECK(res.inertia == 0.0);
  }
  SUBCASE("M < k") { CHECK_THROWS_AS(kmeans_fit(random_matrix(rng, 2, 2), 3, 0), InsufficientDataError); }
}

TEST_CASE("exact_knn") {
  Rng rng(2);
  SUBCASE("query equal to a row") {
    const VectorBank bank = make_bank(random_matrix(rng, 20, 4));
    const auto found = exact_knn(bank, bank.vectors.row(13), 1);
    REQUIRE(found.size() == 1);
    CHECK(found[0].row == 13);
    CHECK(found[0].squared_distance == 0.0);
  }
  SUBCASE("distances 1, 4, 9") {
    FloatMatrix m(3, 1);
    m(0, 0) = 3.0f;
    m(1, 0) = -1.0f;
    m(2, 0) = 2.0f;
    const VectorBank bank = make_bank(m);
    const std::vector<float> q = {0.0f};
    const auto found = exact_knn(bank, q, 2);
    CHECK(found == std::vector<Neighbor>{{1, 1.0}, {2, 4.0}});
  }
  SUBCASE("ties broken by row index") {
    FloatMatrix m(4, 1);
    m(0, 0) = 1.0f;
    m(1, 0) = -1.0f;
    m(2, 0) = 1.0f;
    m(3, 0) = 5.0f;
    const std::vector<float> q = {0.0f};
    const auto found = exact_knn(make_bank(m), q, 2);
    CHECK(found == std::vector<Neighbor>{{0, 1.0}, {1, 1.0}});
  }
  SUBCASE("random bank against the full-sort oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const VectorBank bank = make_bank(random_matrix(rng, 200, 16));
      const FloatMatrix q = random_matrix(rng, 1, 16);
      const auto found = exact_knn(bank, q.row(0), 5);
      const auto want = oracle_sorted_distances(bank.vectors, q.row(0).data());
      for (std::size_t t = 0; t < 5; ++t) {
        CHECK(found[t].row == want[t].second);
        CHECK(found[t].squared_distance == want[t].first);
      }
    }
  }
  SUBCASE("permutation stability by payload") {
    const FloatMatrix m = random_matrix(rng, 50, 3);
    const VectorBank bank = make_bank(m);
    const auto perm = rng.permutation(50);
    VectorBank shuffled;
    shuffled.vectors = FloatMatrix(50, 3);
    for (std::size_t r = 0; r < 50; ++r) {
      for (std::size_t c = 0; c < 3; ++c) shuffled.vectors(r, c) = m(perm[r], c);
      shuffled.payload_ids.push_back(bank.payload_ids[perm[r]]);
    }
    const FloatMatrix q = random_matrix(rng, 1, 3);
    const auto a = exact_knn(bank, q.row(0), 5), b = exact_knn(shuffled, q.row(0), 5);
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(bank.payload_ids[a[t].row] == shuffled.payload_ids[b[t].row]);
      if (t > 0) CHECK(a[t].squared_distance >= a[t - 1].squared_distance);
    }
  }
  SUBCASE("k > M") {
    const VectorBank bank = make_bank(random_matrix(rng, 3, 2));
    const std::vector<float> q = {0.0f, 0.0f};
    CHECK_THROWS_AS(exact_knn(bank, q, 4), InsufficientDataError);
  }
}

TEST_CASE("ivf defaults") {
  CHECK(default_nlist(1) == 1);
  CHECK(default_nlist(4096) == 64);
  CHECK(default_nlist(10) == 3);
  CHECK(default_nlist(4'000'000) == 1024);
  CHECK(default_nprobe(64) == 16);
  CHECK(default_nprobe(3) == 1);
}

TEST_CASE("ivf_build") {
  Rng rng(3);
  SUBCASE("nlist = 1") {
    const VectorBank bank = make_bank(random_matrix(rng, 30, 4));
    const IvfIndex index = ivf_build(bank, 1, 0);
    REQUIRE(index.inverted_lists.size() == 1);
    CHECK(index.inverted_lists[0].size() == 30);
  }
  SUBCASE("two blobs, nlist = 2") {
    FloatMatrix m(100, 3);
    for (std::size_t r = 0; r < 100; ++r) {
      for (std::size_t c = 0; c < 3; ++c) m(r, c) = static_cast<float>((r % 2 ? 20.0 : -20.0) + rng.normal());
    }
    const IvfIndex index = ivf_build(make_bank(m), 2, 5);
    for (const auto& list : index.inverted_lists) {
      REQUIRE(!list.empty());
      const std::size_t parity = list[0] % 2;
      for (std::size_t row : list) CHECK(row % 2 == parity);
      CHECK(list.size() == 50);
    }
  }
  SUBCASE("partition and determinism") {
    const VectorBank bank = make_bank(random_matrix(rng, 500, 8));
    const IvfIndex a = ivf_build(bank, 22, 7), b = ivf_build(bank, 22, 7);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inverted_lists == b.inverted_lists);
    std::vector<int> seen(500, 0);
    for (const auto& list : a.inverted_lists) {
      for (std::size_t row : list) ++seen[row];
    }
    for (int s : seen) CHECK(s == 1);
    CHECK(a.nprobe == default_nprobe(22));
  }
  SUBCASE("nprobe bounds") {
    const VectorBank bank = make_bank(random_matrix(rng, 50, 2));
    IvfIndex index = ivf_build(bank, 5, 0);
    CHECK_THROWS_AS(index.set_nprobe(6), ConfigError);
    CHECK_THROWS_AS(index.set_nprobe(0), ConfigError);
  }
}

TEST_CASE("ivf_query") {
  Rng rng(4);
  SUBCASE("nprobe = nlist equals exact search") {
    for (int trial = 0; trial < 20; ++trial) {
      const VectorBank bank = make_bank(random_matrix(rng, 300, 8));
      IvfIndex index = ivf_build(bank, 12, static_cast<std::uint64_t>(trial));
      index.set_nprobe(12);
      for (int q = 0; q < 5; ++q) {
        const FloatMatrix query = random_matrix(rng, 1, 8);
        CHECK(ivf_query(index, bank, query.row(0), 5) == exact_knn(bank, query.row(0), 5));
      }
    }
  }
  SUBCASE("fallback fills k results") {
    FloatMatrix m(40, 2);
    for (std::size_t r = 0; r < 40; ++r) {
      m(r, 0) = static_cast<float>((r % 8) * 100.0 + rng.normal());
      m(r, 1) = static_cast<float>(rng.normal());
    }
    const VectorBank bank = make_bank(m);
    IvfIndex index = ivf_build(bank, 8, 1);
    index.set_nprobe(1);
    const std::vector<float> q = {0.0f, 0.0f};
    const auto found = ivf_query(index, bank, q, 12);
    CHECK(found.size() == 12);
    std::set<std::size_t> unique = rows_of(found);
    CHECK(unique.size() == 12);
  }
  SUBCASE("recall@5 with nlist 16, nprobe 4 on clustered data") {
    const VectorBank bank = make_bank(clustered(rng, 16, 2000, 16, 1.0, 4.0));
    IvfIndex index = ivf_build(bank, 16, 3);
    index.set_nprobe(4);
    std::size_t hits = 0, total = 0;
    for (int q = 0; q < 200; ++q) {
      const auto query = bank.vectors.row(rng.uniform_index(bank.size()));
      std::vector<float> noisy(query.begin(), query.end());
      for (float& v : noisy) v += static_cast<float>(0.5 * rng.normal());
      const auto exact = rows_of(exact_knn(bank, noisy, 5));
      for (const auto& n : ivf_query(index, bank, noisy, 5)) hits += exact.count(n.row);
      total += 5;
    }
    const double recall = static_cast<double>(hits) / static_cast<double>(total);
    MESSAGE("recall@5 = " << recall);
    CHECK(recall >= 0.9);
  }
  SUBCASE("empty bank") {
    VectorBank empty;
    IvfIndex index;
    const std::vector<float> q = {0.0f};
    CHECK_THROWS_AS(ivf_query(index, empty, q, 1), DataError);
  }
}
