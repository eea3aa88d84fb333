#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wte/heatmap.hpp"

using namespace wte;

namespace {

struct Ppm {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;

  std::array<int, 3> at(std::size_t x, std::size_t y) const {
    const std::size_t off = (y * width + x) * 3;
    return {pixels[off], pixels[off + 1], pixels[off + 2]};
  }
};

Ppm read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string magic;
  in >> magic;
  REQUIRE(magic == "P6");
  Ppm img;
  int maxval = 0;
  in >> img.width >> img.height >> maxval;
  REQUIRE(maxval == 255);
  in.get();  // single whitespace after the header
  img.pixels.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(img.pixels.size()));
  return img;
}

}  // namespace

TEST_CASE("heatmap cells map the value range onto the colour ramp") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "m.ppm";
  // one row: min, midpoint, max
  render_heatmap({{0.0, 0.5, 1.0}}, nullptr, {"r"}, {"a", "b", "c"}, path,
                 HeatmapOptions{.cell_size = 4});

  const auto img = read_ppm(path);
  REQUIRE(img.width == 12);
  REQUIRE(img.height == 4);
  REQUIRE(img.at(0, 0) == std::array<int, 3>{0, 0, 255});     // ramp start
  REQUIRE(img.at(5, 2) == std::array<int, 3>{128, 255, 128});  // midpoint
  REQUIRE(img.at(11, 3) == std::array<int, 3>{255, 0, 0});    // ramp end

  // every pixel of a cell carries the same colour
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      REQUIRE(img.at(x, y) == std::array<int, 3>{0, 0, 255});

  const auto side = testutil::slurp(tmp.path / "m.ppm.labels.txt");
  REQUIRE(side == "rows: r\ncols: a b c\nscale_min: 0\nscale_max: 1\n"
                  "floor: non-significant cells\n");
}

TEST_CASE("non-significant cells get the floor colour and stay out of the "
          "normalisation") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "sig.ppm";
  // the masked 100.0 must not stretch the scale of the three live cells
  const std::vector<std::vector<double>> values{{0.0, 100.0}, {1.0, 2.0}};
  const std::vector<std::vector<bool>> mask{{true, false}, {true, true}};
  render_heatmap(values, &mask, {"r1", "r2"}, {"c1", "c2"}, path,
                 HeatmapOptions{.cell_size = 2});

  const auto img = read_ppm(path);
  REQUIRE(img.at(0, 0) == std::array<int, 3>{0, 0, 255});  // min of live cells
  REQUIRE(img.at(2, 0) == std::array<int, 3>{8, 8, 64});   // floor
  REQUIRE(img.at(2, 2) == std::array<int, 3>{255, 0, 0});  // max of live cells

  const auto side = testutil::slurp(tmp.path / "sig.ppm.labels.txt");
  REQUIRE(side.find("scale_min: 0\n") != std::string::npos);
  REQUIRE(side.find("scale_max: 2\n") != std::string::npos);

  // an all-masked matrix renders as pure floor with an empty scale
  const auto path2 = tmp.path / "allmask.ppm";
  const std::vector<std::vector<bool>> none{{false, false}, {false, false}};
  render_heatmap(values, &none, {"r1", "r2"}, {"c1", "c2"}, path2,
                 HeatmapOptions{.cell_size = 1});
  const auto img2 = read_ppm(path2);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x)
      REQUIRE(img2.at(x, y) == std::array<int, 3>{8, 8, 64});
  const auto side2 = testutil::slurp(tmp.path / "allmask.ppm.labels.txt");
  REQUIRE(side2.find("scale_min: none\n") != std::string::npos);
}

TEST_CASE("explicit scale bounds override the data range") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "fixed.ppm";
  HeatmapOptions opt;
  opt.cell_size = 1;
  opt.vmin = 0.0;
  opt.vmax = 2.0;
  render_heatmap({{1.0}}, nullptr, {"r"}, {"c"}, path, opt);
  const auto img = read_ppm(path);
  // value 1.0 sits midway on a [0, 2] scale
  REQUIRE(img.at(0, 0) == std::array<int, 3>{128, 255, 128});
}

TEST_CASE("identical input renders byte-identical images") {
  testutil::TempDir tmp;
  const std::vector<std::vector<double>> values{{0.1, 0.7}, {-0.4, 3.0}};
  render_heatmap(values, nullptr, {"a", "b"}, {"c", "d"}, tmp.path / "1.ppm");
  render_heatmap(values, nullptr, {"a", "b"}, {"c", "d"}, tmp.path / "2.ppm");
  REQUIRE(testutil::slurp(tmp.path / "1.ppm") ==
          testutil::slurp(tmp.path / "2.ppm"));
  REQUIRE(testutil::slurp(tmp.path / "1.ppm.labels.txt") ==
          testutil::slurp(tmp.path / "2.ppm.labels.txt"));
}

TEST_CASE("malformed heatmap inputs are rejected") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "x.ppm";
  REQUIRE_THROWS_AS(render_heatmap({}, nullptr, {}, {}, path),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      render_heatmap({{1.0}, {2.0, 3.0}}, nullptr, {"a", "b"}, {"c"}, path),
      std::invalid_argument);
  REQUIRE_THROWS_AS(render_heatmap({{1.0}}, nullptr, {"a", "b"}, {"c"}, path),
                    std::invalid_argument);
  const std::vector<std::vector<bool>> short_mask{{true}};
  REQUIRE_THROWS_AS(render_heatmap({{1.0}, {2.0}}, &short_mask, {"a", "b"},
                                   {"c"}, path),
                    std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(render_heatmap({{nan}}, nullptr, {"a"}, {"c"}, path),
                    std::invalid_argument);
}
