#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wte/digest.hpp"
#include "wte/io.hpp"

using namespace wte;

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, -0.0, 1.0, -1.5, 0.1, 1e-300, -2.5e17,
                   3.141592653589793, 1.0 / 3.0}) {
    const std::string s = format_double(v);
    REQUIRE(std::stod(s) == v);
  }
  // shortest representation for simple values
  REQUIRE(format_double(1.0) == "1");
  REQUIRE(format_double(0.5) == "0.5");
}

TEST_CASE("csv recordings survive a save and load cycle") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "rec.csv";
  std::vector<TimeSeries> chans{
      testutil::make_series({1.0, 0.25, -3.5, 1e-12}, 512.0, "eeg"),
      testutil::make_series({-0.5, 2.0, 7.125, 0.0}, 512.0, "emg")};
  save_recording(path, RecordingFormat::csv, chans);

  const auto loaded = load_recording(path, RecordingFormat::csv, 512.0);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].label == "eeg");
  REQUIRE(loaded[1].label == "emg");
  REQUIRE(loaded[0].fs == 512.0);
  REQUIRE(loaded[0].samples == chans[0].samples);
  REQUIRE(loaded[1].samples == chans[1].samples);
}

TEST_CASE("raw recordings use the sidecar and check sizes") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "rec.f64";
  std::vector<TimeSeries> chans{
      testutil::make_series({0.125, -9.0, 3.25}, 1024.0, "x"),
      testutil::make_series({1.5, 2.5, -0.75}, 1024.0, "y")};
  save_recording(path, RecordingFormat::raw_f64, chans);

  const auto loaded = load_recording(path, RecordingFormat::raw_f64, 1024.0);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].samples == chans[0].samples);
  REQUIRE(loaded[1].samples == chans[1].samples);
  REQUIRE(loaded[1].label == "y");

  // truncating the payload must be detected against the sidecar
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "xx";
  }
  REQUIRE_THROWS_WITH(load_recording(path, RecordingFormat::raw_f64, 1024.0),
                      Catch::Matchers::ContainsSubstring("size"));

  REQUIRE_THROWS_WITH(
      load_recording(tmp.path / "nosidecar.f64", RecordingFormat::raw_f64,
                     1024.0),
      Catch::Matchers::ContainsSubstring("sidecar"));
}

TEST_CASE("csv parser reports the offending cell") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "bad.csv";
  {
    std::ofstream out(path);
    out << "a,b\n1.0,2.0\n3.0,oops\n";
  }
  REQUIRE_THROWS_WITH(
      load_recording(path, RecordingFormat::csv, 100.0),
      Catch::Matchers::ContainsSubstring("row 2") &&
          Catch::Matchers::ContainsSubstring("column 2"));

  // windows line endings are tolerated
  const auto crlf = tmp.path / "crlf.csv";
  {
    std::ofstream out(crlf, std::ios::binary);
    out << "a,b\r\n1.5,2.5\r\n3.5,4.5\r\n";
  }
  const auto loaded = load_recording(crlf, RecordingFormat::csv, 100.0);
  REQUIRE(loaded[0].samples == std::vector<double>{1.5, 3.5});
  REQUIRE(loaded[1].samples == std::vector<double>{2.5, 4.5});

  // ragged rows are rejected
  const auto ragged = tmp.path / "ragged.csv";
  {
    std::ofstream out(ragged);
    out << "a,b\n1,2\n3\n";
  }
  REQUIRE_THROWS_AS(load_recording(ragged, RecordingFormat::csv, 100.0),
                    std::runtime_error);

  REQUIRE_THROWS_AS(load_recording(tmp.path / "absent.csv",
                                   RecordingFormat::csv, 100.0),
                    std::runtime_error);
  REQUIRE_THROWS_AS(load_recording(path, RecordingFormat::csv, 0.0),
                    std::invalid_argument);
}

TEST_CASE("non-finite values are rejected on load") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "inf.csv";
  {
    std::ofstream out(path);
    out << "x\n1.0\ninf\n";
  }
  REQUIRE_THROWS_WITH(load_recording(path, RecordingFormat::csv, 128.0),
                      Catch::Matchers::ContainsSubstring("non-finite"));

  const auto raw = tmp.path / "nan.f64";
  std::vector<TimeSeries> chans{testutil::make_series(
      {1.0, std::numeric_limits<double>::quiet_NaN()}, 128.0, "x")};
  save_recording(raw, RecordingFormat::raw_f64, chans);
  REQUIRE_THROWS_WITH(load_recording(raw, RecordingFormat::raw_f64, 128.0),
                      Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("matrix writer emits labelled rows and columns") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "m.csv";
  write_csv_matrix(path, "dst\\src", {"r1", "r2"}, {"c1", "c2", "c3"},
                   {{1.0, 0.5, -2.0}, {0.0, 4.0, 0.25}});
  REQUIRE(testutil::slurp(path) ==
          "dst\\src,c1,c2,c3\nr1,1,0.5,-2\nr2,0,4,0.25\n");

  REQUIRE_THROWS_AS(
      write_csv_matrix(path, "c", {"r1"}, {"c1"}, {{1.0}, {2.0}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(write_csv_matrix(path, "c", {"r1"}, {"c1"}, {{1.0, 2.0}}),
                    std::invalid_argument);
}

TEST_CASE("sha-256 matches published vectors") {
  REQUIRE(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  REQUIRE(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  REQUIRE(sha256_hex(
              "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");

  testutil::TempDir tmp;
  const auto path = tmp.path / "blob.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "abc";
  }
  REQUIRE(sha256_file(path) == sha256_hex("abc"));

  // streaming interface agrees with one-shot hashing
  Sha256 h;
  h.update("ab", 2);
  h.update("c", 1);
  REQUIRE(h.hex_digest() == sha256_hex("abc"));
}
