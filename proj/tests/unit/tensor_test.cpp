#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sroc/error.hpp"
#include "sroc/manifest.hpp"
#include "sroc/npy.hpp"
#include "sroc/random.hpp"
#include "sroc/tensor.hpp"
#include "support.hpp"

using namespace sroc;
using namespace sroc::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sroc_tensor_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> handmade_npy(int major, const std::string& header_dict) {
  std::vector<unsigned char> bytes = {0x93, 'N', 'U', 'M', 'P', 'Y', static_cast<unsigned char>(major), 0};
  std::string header = header_dict;
  const std::size_t prefix = major == 1 ? 10 : 12;
  while ((prefix + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  const std::size_t len = header.size();
  bytes.push_back(static_cast<unsigned char>(len & 0xff));
  bytes.push_back(static_cast<unsigned char>((len >> 8) & 0xff));
  if (major != 1) {
    bytes.push_back(static_cast<unsigned char>((len >> 16) & 0xff));
    bytes.push_back(static_cast<unsigned char>((len >> 24) & 0xff));
  }
  bytes.insert(bytes.end(), header.begin(), header.end());
  return bytes;
}

}  // namespace

TEST_CASE("npy: 1x1 tensor is a 128-byte header plus 4 data bytes") {
  const std::size_t shape[] = {1, 1};
  const float data[] = {0.0f};
  const auto bytes = encode_npy(shape, data);
  CHECK(bytes.size() == 132);
  CHECK(bytes[0] == 0x93);
  CHECK(std::memcmp(bytes.data() + 1, "NUMPY", 5) == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[7] == 0);
  const std::size_t header_len = bytes[8] | (bytes[9] << 8);
  CHECK(10 + header_len == 128);
  CHECK(bytes[127] == '\n');
  const std::string header(bytes.begin() + 10, bytes.begin() + 128);
  CHECK(header.find("'descr': '<f4'") != std::string::npos);
  CHECK(header.find("'fortran_order': False") != std::string::npos);
  CHECK(header.find("'shape': (1, 1)") != std::string::npos);
}

TEST_CASE("npy: round trips are bit exact") {
  Rng rng(7);
  const fs::path dir = temp_dir("roundtrip");
  SUBCASE("2x3 zeros") {
    NpyArray a{{2, 3}, std::vector<float>(6, 0.0f)};
    save_array_npy(a, dir / "z.npy");
    const NpyArray b = read_npy(dir / "z.npy");
    CHECK(b.shape == a.shape);
    CHECK(b.data == a.data);
  }
  SUBCASE("random 4x5x6x7") {
    NpyArray a{{4, 5, 6, 7}, std::vector<float>(4 * 5 * 6 * 7)};
    for (float& v : a.data) v = static_cast<float>(rng.normal() * 100.0);
    save_array_npy(a, dir / "r.npy");
    const NpyArray b = read_npy(dir / "r.npy");
    CHECK(b.shape == a.shape);
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
    CHECK(encode_npy(b.shape, b.data) == read_bytes(dir / "r.npy"));
  }
  SUBCASE("one million elements, including special bit patterns") {
    NpyArray a{{1000, 1000}, std::vector<float>(1000000)};
    for (std::size_t k = 0; k < a.data.size(); ++k) {
      const auto bits = static_cast<std::uint32_t>(rng.next());
      // Keep exponents away from all-ones so every value is finite.
      const std::uint32_t safe = (bits & 0x7f800000u) == 0x7f800000u ? bits & 0xbfffffffu : bits;
      std::memcpy(&a.data[k], &safe, sizeof(float));
    }
    a.data[0] = -0.0f;
    a.data[1] = 1e-45f;  // subnormal
    save_array_npy(a, dir / "m.npy");
    const NpyArray b = read_npy(dir / "m.npy");
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("npy: versions 2 and 3 headers parse") {
  for (int major : {2, 3}) {
    auto bytes = handmade_npy(major, "{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }");
    const float payload[] = {1.5f, -2.0f};
    const auto* p = reinterpret_cast<const unsigned char*>(payload);
    bytes.insert(bytes.end(), p, p + sizeof(payload));
    const NpyArray a = parse_npy(bytes);
    CHECK(a.shape == std::vector<std::size_t>{2});
    CHECK(a.data == std::vector<float>{1.5f, -2.0f});
  }
}

TEST_CASE("npy: malformed headers report a byte offset") {
  SUBCASE("bad magic") {
    std::vector<unsigned char> bytes = {0x93, 'N', 'U', 'M', 'P', 'X', 1, 0, 0, 0};
    try {
      parse_npy(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.byte_offset() < 6);
    }
  }
  SUBCASE("wrong dtype") {
    auto bytes = handmade_npy(1, "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }");
    bytes.resize(bytes.size() + 8, 0);
    try {
      parse_npy(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.byte_offset() >= 10);
      CHECK(e.byte_offset() < 128);
    }
  }
  SUBCASE("fortran order") {
    auto bytes = handmade_npy(1, "{'descr': '<f4', 'fortran_order': True, 'shape': (1,), }");
    bytes.resize(bytes.size() + 4, 0);
    CHECK_THROWS_AS(parse_npy(bytes), ParseError);
  }
  SUBCASE("truncated payload") {
    auto bytes = handmade_npy(1, "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }");
    bytes.resize(bytes.size() + 4, 0);
    CHECK_THROWS_AS(parse_npy(bytes), ParseError);
  }
  SUBCASE("truncated header") {
    auto bytes = handmade_npy(1, "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }");
    bytes.resize(40);
    CHECK_THROWS_AS(parse_npy(bytes), ParseError);
  }
}

TEST_CASE("npy: unwritable path is an I/O error") {
  const std::size_t shape[] = {1};
  const float data[] = {1.0f};
  CHECK_THROWS_AS(save_array_npy(shape, data, "/nonexistent_dir_sroc/x.npy"), IoError);
}

TEST_CASE("load_embedding_set: consistency, mismatch and non-finite values") {
  Rng rng(3);
  const fs::path dir = temp_dir("load");
  const FeatureLevel a = random_level(rng, 4, 3, 2, 2, 3);
  const FeatureLevel b = random_level(rng, 6, 3, 1, 1, 5);
  const FeatureLevel c = random_level(rng, 7, 4, 1, 1, 2);
  save_level_npy(a, dir / "level_4.npy");
  save_level_npy(b, dir / "level_6.npy");
  save_level_npy(c, dir / "level_7.npy");
  Manifest manifest;
  for (int k = 0; k < 3; ++k) manifest.push_back({"id" + std::to_string(k), Split::Train, Health::Healthy, {}, {}});
  save_manifest(manifest, dir / "manifest.json");

  SUBCASE("two levels with N=3") {
    const std::vector<fs::path> files = {dir / "level_4.npy", dir / "level_6.npy"};
    const EmbeddingSet set = load_embedding_set(dir / "manifest.json", files);
    CHECK(set.size() == 3);
    CHECK(set.sample_ids == std::vector<std::string>{"id0", "id1", "id2"});
    REQUIRE(set.levels.size() == 2);
    CHECK(set.levels[0].level_id == 4);
    CHECK(set.levels[1].level_id == 6);
    CHECK(set.levels[0].data == a.data);
    CHECK(set.total_channels() == 8);
  }
  SUBCASE("N=3 and N=4 is a shape error naming the file") {
    const std::vector<fs::path> files = {dir / "level_4.npy", dir / "level_7.npy"};
    try {
      load_embedding_set(dir / "manifest.json", files);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("level_7.npy") != std::string::npos);
    }
  }
  SUBCASE("manifest row count must equal N") {
    const std::vector<fs::path> files = {dir / "level_7.npy"};
    CHECK_THROWS_AS(load_embedding_set(dir / "manifest.json", files), ShapeError);
  }
  SUBCASE("non-finite value reports its index") {
    FeatureLevel bad = a;
    bad.data[5] = std::numeric_limits<float>::quiet_NaN();
    save_level_npy(bad, dir / "bad_1.npy");
    const std::vector<fs::path> files = {dir / "bad_1.npy"};
    try {
      load_embedding_set(dir / "manifest.json", files);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string what = e.what();
      CHECK(what.find('5') != std::string::npos);
    }
  }
}

TEST_CASE("global_average_pool") {
  Rng rng(11);
  SUBCASE("constant tensor") {
    FeatureLevel level{0, 2, 3, 4, 5, std::vector<float>(2 * 3 * 4 * 5, 2.5f)};
    const FloatMatrix g = global_average_pool(level);
    for (float v : g.data) CHECK(v == 2.5f);
  }
  SUBCASE("1x1 grid copies channels") {
    const FeatureLevel level = random_level(rng, 0, 3, 1, 1, 6);
    const FloatMatrix g = global_average_pool(level);
    CHECK(g.data == level.data);
  }
  SUBCASE("random 2x3x3x4 against the loop oracle") {
    const FeatureLevel level = random_level(rng, 0, 2, 3, 3, 4);
    const FloatMatrix g = global_average_pool(level);
    const FloatMatrix o = oracle_gap(level);
    for (std::size_t k = 0; k < g.data.size(); ++k) CHECK(g.data[k] == doctest::Approx(o.data[k]).epsilon(1e-6));
  }
  SUBCASE("linearity") {
    for (int trial = 0; trial < 20; ++trial) {
      const FeatureLevel x = random_level(rng, 0, 3, 4, 5, 6);
      const FeatureLevel y = random_level(rng, 0, 3, 4, 5, 6);
      const double a = rng.normal(), b = rng.normal();
      FeatureLevel z = x;
      for (std::size_t k = 0; k < z.data.size(); ++k) z.data[k] = static_cast<float>(a * x.data[k] + b * y.data[k]);
      const FloatMatrix gx = global_average_pool(x), gy = global_average_pool(y), gz = global_average_pool(z);
      for (std::size_t k = 0; k < gz.data.size(); ++k) {
        const double want = a * gx.data[k] + b * gy.data[k];
        CHECK(std::abs(gz.data[k] - want) <= 1e-5 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST_CASE("concat_pooled_levels") {
  Rng rng(5);
  SUBCASE("one level equals GAP") {
    EmbeddingSet set = random_set(rng, 4, {{3, 3, 5}});
    CHECK(concat_pooled_levels(set) == global_average_pool(set.levels[0]));
    CHECK(set.pooled.has_value());
  }
  SUBCASE("C=2 and C=3 give D=5 block-wise") {
    EmbeddingSet set = random_set(rng, 3, {{2, 2, 2}, {1, 1, 3}});
    const FloatMatrix& p = concat_pooled_levels(set);
    CHECK(p.cols == 5);
    const FloatMatrix g0 = global_average_pool(set.levels[0]), g1 = global_average_pool(set.levels[1]);
    for (std::size_t n = 0; n < 3; ++n) {
      CHECK(p(n, 0) == g0(n, 0));
      CHECK(p(n, 1) == g0(n, 1));
      for (std::size_t c = 0; c < 3; ++c) CHECK(p(n, 2 + c) == g1(n, c));
    }
  }
  SUBCASE("three random levels slice-wise") {
    const EmbeddingSet set = random_set(rng, 5, {{4, 4, 3}, {2, 2, 4}, {1, 1, 2}});
    const FloatMatrix p = concat_pooled_levels(set);
    std::size_t offset = 0;
    for (const auto& level : set.levels) {
      const FloatMatrix g = global_average_pool(level);
      for (std::size_t n = 0; n < set.size(); ++n) {
        for (std::size_t c = 0; c < level.channels; ++c) CHECK(p(n, offset + c) == g(n, c));
      }
      offset += level.channels;
    }
  }
  SUBCASE("no levels is an error") {
    EmbeddingSet empty;
    empty.sample_ids = {"a"};
    CHECK_THROWS_AS(concat_pooled_levels(empty), DataError);
  }
}

TEST_CASE("align_and_concat") {
  Rng rng(9);
  SUBCASE("single level is unchanged") {
    const EmbeddingSet set = random_set(rng, 2, {{3, 4, 5}});
    const AlignedPatchGrid grid = align_and_concat(set);
    CHECK(grid.height == 3);
    CHECK(grid.width == 4);
    CHECK(grid.data == set.levels[0].data);
  }
  SUBCASE("2x2 to 4x4 replicates into 2x2 blocks") {
    EmbeddingSet set = random_set(rng, 1, {{4, 4, 1}, {2, 2, 1}});
    const AlignedPatchGrid grid = align_and_concat(set);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(grid.patch(0, i, j)[1] == set.levels[1].patch(0, i / 2, j / 2)[0]);
    }
  }
  SUBCASE("4x4 (C=2) and 2x2 (C=3) against index arithmetic") {
    const EmbeddingSet set = random_set(rng, 3, {{4, 4, 2}, {2, 2, 3}});
    const AlignedPatchGrid grid = align_and_concat(set);
    CHECK(grid.channels == 5);
    for (std::size_t n = 0; n < 3; ++n) {
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          const auto want = oracle_aligned_patch(set, n, i, j, 4, 4);
          const auto got = grid.patch(n, i, j);
          CHECK(std::vector<float>(got.begin(), got.end()) == want);
        }
      }
    }
  }
  SUBCASE("channel sums preserved with replication weights") {
    const EmbeddingSet set = random_set(rng, 2, {{6, 6, 2}, {3, 3, 2}, {2, 2, 3}});
    const AlignedPatchGrid grid = align_and_concat(set);
    std::size_t offset = 0;
    for (const auto& level : set.levels) {
      const double weight = static_cast<double>(level.height * level.width) / static_cast<double>(grid.height * grid.width);
      for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t c = 0; c < level.channels; ++c) {
          double fine = 0.0, coarse = 0.0;
          for (std::size_t i = 0; i < grid.height; ++i) {
            for (std::size_t j = 0; j < grid.width; ++j) fine += grid.patch(n, i, j)[offset + c];
          }
          for (std::size_t i = 0; i < level.height; ++i) {
            for (std::size_t j = 0; j < level.width; ++j) coarse += level.patch(n, i, j)[c];
          }
          CHECK(fine * weight == doctest::Approx(coarse).epsilon(1e-9));
        }
      }
      offset += level.channels;
    }
  }
}

TEST_CASE("subset and manifest round trip") {
  Rng rng(1);
  EmbeddingSet set = random_set(rng, 4, {{2, 2, 3}});
  concat_pooled_levels(set);
  const std::vector<std::string> ids = {"s2", "s0"};
  const EmbeddingSet sub = set.subset_by_ids(ids);
  CHECK(sub.sample_ids == ids);
  CHECK(sub.pooled->rows == 2);
  CHECK(sub.levels[0].patch(0, 1, 1)[2] == set.levels[0].patch(2, 1, 1)[2]);
  const std::vector<std::string> unknown = {"nope"};
  CHECK_THROWS_AS(set.subset_by_ids(unknown), DataError);

  Manifest m = {{"a", Split::Train, Health::Healthy, {}, {}},
                {"b", Split::Val, Health::Defective, std::string("crack"), std::string("masks/b.png")}};
  CHECK(parse_manifest(dump_manifest(m)) == m);
  CHECK_THROWS_AS(parse_manifest(R"([{"id":"a","split":"test","label":"healthy"}])"), DataError);
}
