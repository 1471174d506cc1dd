#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "isac/errors.hpp"
#include "isac/sensing_dft.hpp"
#include "isac/tensor_io.hpp"
#include "oracles.hpp"

using namespace isac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "isac_unit_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("echo cube round-trips bit-exactly") {
  std::mt19937_64 rng(1);
  EchoCube y(3, 4, 5);
  for (auto& v : y.data()) v = oracle::random_cvec(rng, 1)(0);
  const auto p = scratch("echo.bin");
  save_echo(p, y, 42, "abc123");
  const auto back = load_echo(p);
  CHECK(back.dims() == y.dims());
  CHECK(std::equal(y.data().begin(), y.data().end(), back.data().begin()));
  const auto raw = read_tensor(p);
  CHECK(raw.header.seed == 42);
  CHECK(raw.header.config_hash == "abc123");
  CHECK(raw.header.kind == "echo");
}

TEST_CASE("processed cube keeps its bin offsets") {
  std::mt19937_64 rng(2);
  ProcessedCube c;
  c.values = Cube3(4, 6, 2);
  for (auto& v : c.values.data()) v = oracle::random_cvec(rng, 1)(0);
  c.angle = centered_axis(4);
  c.delay = delay_axis(6);
  c.doppler = centered_axis(2);
  const auto p = scratch("processed.bin");
  save_processed(p, c, 7, "h");
  const auto back = load_processed(p);
  CHECK(back.angle.first == -2);
  CHECK(back.delay.first == -5);
  CHECK(back.delay.period == 6);
  CHECK(back.doppler.count == 2);
  CHECK(back.at(-1, -3, 0) == c.at(-1, -3, 0));
  CHECK_THROWS_AS(load_echo(p), FormatError);
}

TEST_CASE("channel set round-trips with its path metadata") {
  const auto cfg = desk_profile();
  const auto h = generate_channel(cfg, 5);
  const auto p = scratch("channel.bin");
  save_channel(p, h, hash_hex(config_hash(cfg)));
  const auto back = load_channel(p);
  REQUIRE(back.num_subcarriers() == h.num_subcarriers());
  for (int i = 0; i < h.num_subcarriers(); ++i) CHECK(back.h[i] == h.h[i]);
  REQUIRE(back.users.size() == h.users.size());
  CHECK(back.users[1].d == h.users[1].d);
  CHECK(back.users[1].scatterers.size() == h.users[1].scatterers.size());
  CHECK(back.users[0].scatterers[2].delta == h.users[0].scatterers[2].delta);
  CHECK(back.seed == h.seed);
}

TEST_CASE("malformed containers are rejected") {
  const auto p = scratch("bad.bin");
  {
    std::ofstream f(p, std::ios::binary);
    f << "NOT A TENSOR\n";
  }
  CHECK_THROWS_AS(read_tensor(p), FormatError);
  {
    std::ofstream f(p, std::ios::binary);
    f << "ISACTENSOR 1\nkind: echo\ndtype: complex128\nshape: 2 2 2\nend\n1234";
  }
  CHECK_THROWS_AS(read_tensor(p), FormatError);
  CHECK_THROWS_AS(read_tensor(scratch("missing.bin")), FormatError);
}
