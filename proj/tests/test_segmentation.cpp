#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "glandflow/scorer.hpp"
#include "glandflow/segmentation.hpp"
#include "glandflow/synthetic.hpp"
#include "oracles.hpp"

using namespace glandflow;

namespace {

ScoreMap map_from_mask(const BinaryMask& m, ScoreKind kind) {
  ScoreMap sm(m.height, m.width, kind);
  for (size_t i = 0; i < m.bits.size(); ++i) sm.values[i] = m.bits[i] ? 1.0 : 0.0;
  return sm;
}

BinaryMask random_mask(int h, int w, uint64_t seed, double p = 0.45) {
  BinaryMask m(h, w);
  Rng rng(seed);
  for (auto& b : m.bits) b = rng.uniform01() < p ? 1 : 0;
  return m;
}

// scorer that returns fixed maps, for driving segment_tile in tests
class FixedScorer : public PixelScorer {
 public:
  FixedScorer(ScoreMap epi, ScoreMap bnd) : epi_(std::move(epi)), bnd_(std::move(bnd)) {}
  std::pair<ScoreMap, ScoreMap> score(const Tile&) const override { return {epi_, bnd_}; }

 private:
  ScoreMap epi_, bnd_;
};

double instance_iou(const GlandInstance& a, const GlandInstance& b) {
  std::set<std::pair<int, int>> sa, sb;
  for (const auto& p : a.pixel_set) sa.insert({p.r, p.c});
  for (const auto& p : b.pixel_set) sb.insert({p.r, p.c});
  size_t inter = 0;
  for (const auto& p : sa) inter += sb.count(p);
  size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST_CASE("subtract_boundary") {
  SegmentationConfig cfg;

  SECTION("zero boundary leaves the binarized epithelium") {
    ScoreMap epi(4, 4, ScoreKind::Epithelium);
    epi.at(1, 1) = 0.9;
    epi.at(2, 2) = 0.5;
    epi.at(3, 3) = 0.49;
    ScoreMap bnd(4, 4, ScoreKind::Boundary);
    BinaryMask m = subtract_boundary(epi, bnd, cfg);
    REQUIRE(m.count() == 2);  // 0.5 is inclusive, 0.49 is not
    REQUIRE(m.at(1, 1) == 1);
    REQUIRE(m.at(2, 2) == 1);
  }

  SECTION("boundary equal to epithelium cancels everything") {
    ScoreMap epi(5, 5, ScoreKind::Epithelium);
    for (auto& v : epi.values) v = 0.8;
    ScoreMap bnd = epi;
    bnd.kind = ScoreKind::Boundary;
    REQUIRE(subtract_boundary(epi, bnd, cfg).count() == 0);
  }

  SECTION("a ring-shaped boundary bisecting a blob yields two components") {
    // blob rows 1..7, ring wall at row 4
    ScoreMap epi(9, 9, ScoreKind::Epithelium);
    for (int r = 1; r <= 7; ++r)
      for (int c = 1; c <= 7; ++c) epi.at(r, c) = 1.0;
    ScoreMap bnd(9, 9, ScoreKind::Boundary);
    for (int c = 0; c < 9; ++c) bnd.at(4, c) = 1.0;
    BinaryMask m = subtract_boundary(epi, bnd, cfg);
    REQUIRE(gf_oracle::count_components(m, 4) == 2);
  }

  SECTION("shape mismatch") {
    ScoreMap epi(3, 3, ScoreKind::Epithelium), bnd(3, 4, ScoreKind::Boundary);
    REQUIRE_THROWS_AS(subtract_boundary(epi, bnd, cfg), std::invalid_argument);
  }
}

TEST_CASE("connected_components") {
  SegmentationConfig cfg;

  SECTION("empty mask") {
    BinaryMask m(5, 5);
    REQUIRE(connected_components(m, cfg).empty());
  }

  SECTION("diagonal pixels: 2 components at connectivity 4, 1 at 8") {
    BinaryMask m(3, 3);
    m.at(0, 0) = 1;
    m.at(1, 1) = 1;
    REQUIRE(connected_components(m, cfg).size() == 2);
    SegmentationConfig cfg8 = cfg;
    cfg8.connectivity = 8;
    REQUIRE(connected_components(m, cfg8).size() == 1);
  }

  SECTION("4x4 checkerboard gives 8 single-pixel components") {
    BinaryMask m(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m.at(r, c) = (r + c) % 2 == 0 ? 1 : 0;
    auto comps = connected_components(m, cfg);
    REQUIRE(comps.size() == 8);
    for (const auto& inst : comps) REQUIRE(inst.area_px == 1);
  }

  SECTION("ids follow row-major order of first pixels and stats are tight") {
    BinaryMask m(6, 6);
    for (int c = 2; c <= 4; ++c) m.at(0, c) = 1;
    m.at(4, 0) = 1;
    m.at(5, 0) = 1;
    auto comps = connected_components(m, cfg);
    REQUIRE(comps.size() == 2);
    REQUIRE(comps[0].id == 1);
    REQUIRE(comps[0].pixel_set.front() == PixelCoord{0, 2});
    REQUIRE(comps[0].r0 == 0);
    REQUIRE(comps[0].r1 == 0);
    REQUIRE(comps[0].c0 == 2);
    REQUIRE(comps[0].c1 == 4);
    REQUIRE(comps[1].id == 2);
    REQUIRE(comps[1].area_px == 2);
  }

  SECTION("matches the flood-fill oracle on random masks") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
      BinaryMask m = random_mask(16, 16, seed);
      for (int conn : {4, 8}) {
        SegmentationConfig c = cfg;
        c.connectivity = conn;
        auto comps = connected_components(m, c);
        auto labels = gf_oracle::flood_fill_labels(m, conn);
        int n = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
        REQUIRE(static_cast<int>(comps.size()) == n);
        // partitions must agree exactly (both number by first-pixel order)
        for (const auto& inst : comps)
          for (const auto& p : inst.pixel_set)
            REQUIRE(labels[static_cast<size_t>(p.r) * 16 + p.c] == inst.id);
      }
    }
  }
}

TEST_CASE("remove_small") {
  SegmentationConfig cfg;  // min area 64

  auto make_inst = [](int id, int area) {
    GlandInstance g;
    g.id = id;
    for (int i = 0; i < area; ++i) g.pixel_set.push_back({0, i});
    g.recompute_stats();
    return g;
  };

  SECTION("areas {10, 64, 300} with threshold 64 keep {64, 300}") {
    std::vector<GlandInstance> in = {make_inst(1, 10), make_inst(2, 64), make_inst(3, 300)};
    auto out = remove_small(in, cfg);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].id == 2);
    REQUIRE(out[1].id == 3);
  }

  SECTION("identity when everything passes") {
    std::vector<GlandInstance> in = {make_inst(1, 64), make_inst(2, 100)};
    REQUIRE(remove_small(in, cfg).size() == 2);
  }

  SECTION("equals the filter oracle and is monotone in the threshold") {
    Rng rng(3);
    std::vector<GlandInstance> in;
    for (int i = 0; i < 20; ++i) in.push_back(make_inst(i + 1, static_cast<int>(rng.uniform_int(1, 200))));
    size_t prev = in.size();
    for (int thr : {1, 32, 64, 100, 201}) {
      SegmentationConfig c = cfg;
      c.min_component_area_px = thr;
      auto out = remove_small(in, c);
      size_t expect = 0;
      for (const auto& g : in) expect += g.area_px >= thr;
      REQUIRE(out.size() == expect);
      REQUIRE(out.size() <= prev);
      prev = out.size();
    }
  }
}

TEST_CASE("region_grow") {
  SECTION("instances already covering the mask are unchanged") {
    BinaryMask epi(4, 4);
    epi.at(1, 1) = epi.at(1, 2) = 1;
    GlandInstance g;
    g.id = 1;
    g.pixel_set = {{1, 1}, {1, 2}};
    g.recompute_stats();
    auto out = region_grow({g}, epi);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].pixel_set == g.pixel_set);
  }

  SECTION("a single seed grows to the whole 5x5 square") {
    BinaryMask epi(7, 7);
    for (int r = 1; r <= 5; ++r)
      for (int c = 1; c <= 5; ++c) epi.at(r, c) = 1;
    GlandInstance g;
    g.id = 1;
    g.pixel_set = {{3, 3}};
    g.recompute_stats();
    auto out = region_grow({g}, epi);
    REQUIRE(out[0].area_px == 25);
  }

  SECTION("two seeds in a corridor split by the smallest-id rule") {
    BinaryMask epi(3, 11);
    for (int c = 0; c < 11; ++c) epi.at(1, c) = 1;
    GlandInstance a, b;
    a.id = 1;
    a.pixel_set = {{1, 2}};
    a.recompute_stats();
    b.id = 2;
    b.pixel_set = {{1, 8}};
    b.recompute_stats();
    auto out = region_grow({a, b}, epi);

    auto oracle = gf_oracle::multi_source_grow_oracle({a, b}, epi);
    for (const auto& inst : out)
      for (const auto& p : inst.pixel_set)
        REQUIRE(oracle[static_cast<size_t>(p.r) * 11 + p.c] == inst.id);
    // the equidistant middle pixel (1,5) goes to the smaller id
    REQUIRE(oracle[1 * 11 + 5] == 1);
  }

  SECTION("matches the synchronous BFS oracle on random fixtures") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      BinaryMask epi = random_mask(12, 12, rng.next_u64(), 0.7);
      // pick up to 3 seed pixels from the mask
      std::vector<GlandInstance> seeds;
      int id = 1;
      for (int r = 0; r < 12 && id <= 3; ++r)
        for (int c = 0; c < 12 && id <= 3; ++c)
          if (epi.at(r, c) && rng.uniform01() < 0.05) {
            GlandInstance g;
            g.id = id++;
            g.pixel_set = {{r, c}};
            g.recompute_stats();
            seeds.push_back(g);
          }
      if (seeds.empty()) continue;
      auto out = region_grow(seeds, epi);
      auto oracle = gf_oracle::multi_source_grow_oracle(seeds, epi);

      std::vector<int> got(12 * 12, 0);
      for (const auto& inst : out)
        for (const auto& p : inst.pixel_set) {
          REQUIRE(got[static_cast<size_t>(p.r) * 12 + p.c] == 0);  // disjoint
          got[static_cast<size_t>(p.r) * 12 + p.c] = inst.id;
          REQUIRE(epi.at(p.r, p.c) == 1);  // never leaves the mask
        }
      REQUIRE(got == oracle);
    }
  }

  SECTION("instance pixel outside the mask is an error") {
    BinaryMask epi(3, 3);
    GlandInstance g;
    g.id = 1;
    g.pixel_set = {{1, 1}};
    g.recompute_stats();
    REQUIRE_THROWS_AS(region_grow({g}, epi), std::invalid_argument);
  }
}

TEST_CASE("segment_tile") {
  SegmentationConfig cfg;

  SECTION("blank tile gives no instances") {
    Tile tile(32, 32, 255);
    tile.id = "blank";
    ScoreMap epi(32, 32, ScoreKind::Epithelium), bnd(32, 32, ScoreKind::Boundary);
    FixedScorer scorer(epi, bnd);
    REQUIRE(segment_tile(tile, scorer, cfg).empty());
  }

  SECTION("synthetic annuli are recovered with IoU >= 0.9 each") {
    SynthSpec spec;
    spec.seed = 2024;
    spec.min_glands = 3;
    spec.max_glands = 3;
    SynthTile st = generate_tile(spec, 0, "fix");

    FixedScorer scorer(map_from_mask(st.epithelium, ScoreKind::Epithelium),
                       map_from_mask(st.boundary, ScoreKind::Boundary));
    auto pred = segment_tile(st.tile, scorer, cfg);
    REQUIRE(pred.size() == st.instances.size());
    for (const auto& truth : st.instances) {
      double best = 0.0;
      for (const auto& p : pred) best = std::max(best, instance_iou(p, truth));
      REQUIRE(best >= 0.9);
    }
  }

  SECTION("two glands sharing a 1-px wall stay separate") {
    ScoreMap epi(10, 11, ScoreKind::Epithelium), bnd(10, 11, ScoreKind::Boundary);
    for (int r = 0; r < 10; ++r)
      for (int c = 0; c < 11; ++c) epi.at(r, c) = 1.0;
    for (int r = 0; r < 10; ++r) bnd.at(r, 5) = 1.0;
    Tile tile(10, 11, 100);
    FixedScorer scorer(epi, bnd);
    SegmentationConfig small_cfg = cfg;
    small_cfg.min_component_area_px = 10;
    auto out = segment_tile(tile, scorer, small_cfg);
    REQUIRE(out.size() == 2);
    // all epithelium, including the wall, ends up assigned
    size_t total = 0;
    for (const auto& inst : out) total += inst.pixel_set.size();
    REQUIRE(total == 110);
  }

  SECTION("deterministic, ids included") {
    SynthSpec spec;
    spec.seed = 77;
    SynthTile st = generate_tile(spec, 0, "det");
    FixedScorer scorer(map_from_mask(st.epithelium, ScoreKind::Epithelium),
                       map_from_mask(st.boundary, ScoreKind::Boundary));
    auto a = segment_tile(st.tile, scorer, cfg);
    auto b = segment_tile(st.tile, scorer, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].id == b[i].id);
      REQUIRE(a[i].pixel_set == b[i].pixel_set);
    }
  }

  SECTION("scorer output shape mismatch is rejected") {
    Tile tile(16, 16, 0);
    ScoreMap epi(8, 8, ScoreKind::Epithelium), bnd(8, 8, ScoreKind::Boundary);
    FixedScorer scorer(epi, bnd);
    REQUIRE_THROWS_AS(segment_tile(tile, scorer, cfg), std::invalid_argument);
  }
}

TEST_CASE("instance raster round trip") {
  SynthSpec spec;
  spec.seed = 5;
  SynthTile st = generate_tile(spec, 0, "rt");
  auto raster = instance_raster(st.instances, st.tile.height, st.tile.width);
  auto back = instances_from_raster(raster, st.tile.height, st.tile.width);
  REQUIRE(back.size() == st.instances.size());
  for (const auto& orig : st.instances) {
    auto it = std::find_if(back.begin(), back.end(),
                           [&](const GlandInstance& g) { return g.id == orig.id; });
    REQUIRE(it != back.end());
    REQUIRE(it->pixel_set == orig.pixel_set);
    REQUIRE(it->area_px == orig.area_px);
  }
}

TEST_CASE("file-backed scorer returns stored maps") {
  auto dir = std::filesystem::temp_directory_path() / "gf_scores";
  std::filesystem::create_directories(dir);
  ScoreMap epi(6, 6, ScoreKind::Epithelium), bnd(6, 6, ScoreKind::Boundary);
  Rng rng(9);
  for (auto& v : epi.values) v = static_cast<double>(rng.uniform_int(0, 65535)) / 65535.0;
  for (auto& v : bnd.values) v = static_cast<double>(rng.uniform_int(0, 65535)) / 65535.0;
  save_score_map(epi, (dir / "x_epithelium.png").string());
  save_score_map(bnd, (dir / "x_boundary.png").string());

  Tile tile(6, 6, 0);
  tile.id = "x";
  FileBackedScorer scorer(dir.string());
  auto [e2, b2] = score_pixels(tile, scorer);
  REQUIRE(e2.values == epi.values);
  REQUIRE(b2.values == bnd.values);
}
