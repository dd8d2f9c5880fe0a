#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "gpr/io.hpp"

using namespace gpr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "gpr_test_io";
  fs::create_directories(dir);
  return dir / name;
}

Image random_image(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Image img(g);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = n(rng);
  return img;
}

void check_io_error(const fs::path& p) {
  try {
    (void)io::read_image(p);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

}  // namespace

TEST_CASE("image round trip is bit exact") {
  const GridSpec g(7, 5, 1.75, 1.25);
  Image f = random_image(g, 1);
  f[3] = std::numeric_limits<double>::denorm_min();
  f[4] = -0.0;
  const fs::path p = scratch("img.gpr");
  io::write_image(p, f);
  const Image back = io::read_image(p);
  CHECK(back.grid() == g);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::signbit(back[i]) == std::signbit(f[i]));
  CHECK(std::equal(f.values().begin(), f.values().end(), back.values().begin()));
}

TEST_CASE("container layout") {
  const GridSpec g(3, 2, 3.0, 2.0);
  Image f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i) + 0.5;
  const fs::path p = scratch("layout.gpr");
  io::write_image(p, f);

  std::ifstream in(p, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() > 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GPR1");
  const std::uint32_t hlen = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) | (static_cast<std::uint32_t>(bytes[7]) << 24);
  const auto header = nlohmann::json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + hlen));
  CHECK(header["kind"] == "image");
  CHECK(header["nx"] == 3);
  CHECK(header["ny"] == 2);
  CHECK(header["dtype"] == "f64");
  CHECK(bytes.size() == 8 + hlen + 8 * f.size());
  // row-major little-endian payload
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v;
    unsigned char le[8];
    for (int b = 0; b < 8; ++b) le[b] = bytes[8 + hlen + 8 * i + b];
    std::memcpy(&v, le, 8);
    CHECK(v == f[i]);
  }
}

TEST_CASE("vector field and sinogram round trip") {
  const GridSpec g = GridSpec::square(9, 2.0);
  const VectorField v(random_image(g, 2), random_image(g, 3));
  io::write_vector_field(scratch("v.gpr"), v);
  const VectorField vb = io::read_vector_field(scratch("v.gpr"));
  CHECK(std::equal(v.vx().values().begin(), v.vx().values().end(), vb.vx().values().begin()));
  CHECK(std::equal(v.vy().values().begin(), v.vy().values().end(), vb.vy().values().begin()));

  const ProjGeometry geom(g, 5, 11);
  Sinogram s(geom);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.1 * static_cast<double>(i * i);
  io::write_sinogram(scratch("s.gpr"), s);
  const Sinogram sb = io::read_sinogram(scratch("s.gpr"));
  CHECK(sb.geometry() == geom);
  CHECK(std::equal(s.values().begin(), s.values().end(), sb.values().begin()));
}

TEST_CASE("malformed containers are I/O errors") {
  check_io_error(scratch("does_not_exist.gpr"));

  {
    std::ofstream(scratch("bad_magic.gpr"), std::ios::binary) << "GPR2xxxxxxxx";
  }
  check_io_error(scratch("bad_magic.gpr"));

  io::write_image(scratch("trunc.gpr"), Image(GridSpec::square(4, 1.0), 1.0));
  fs::resize_file(scratch("trunc.gpr"), fs::file_size(scratch("trunc.gpr")) - 3);
  check_io_error(scratch("trunc.gpr"));

  // a sinogram is not an image
  io::write_sinogram(scratch("kind.gpr"), Sinogram(ProjGeometry(GridSpec::square(4, 1.0), 2, 3)));
  check_io_error(scratch("kind.gpr"));
}

TEST_CASE("pgm export records its scaling") {
  const GridSpec g(4, 2, 4.0, 2.0);
  Image f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = -1.0 + 0.5 * static_cast<double>(i);
  const fs::path p = scratch("f.pgm");
  io::export_pgm16(p, f);
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  in.get();
  CHECK(magic == "P5");
  CHECK(w == 4);
  CHECK(h == 2);
  CHECK(maxval == 65535);
  unsigned char px[16];
  in.read(reinterpret_cast<char*>(px), 16);
  CHECK(in.gcount() == 16);
  // big-endian samples, top row (largest y) first
  int k = 0;
  for (int iy = 1; iy >= 0; --iy)
    for (int ix = 0; ix < 4; ++ix, ++k) {
      const long expected = std::lround((f(ix, iy) + 1.0) * 65535.0 / 3.5);
      CHECK((px[2 * k] << 8 | px[2 * k + 1]) == expected);
    }
  const auto side = io::read_json(fs::path(p.string() + ".json"));
  CHECK(side["min"].get<double>() == -1.0);
  CHECK(side["max"].get<double>() == 2.5);
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) / 7.0;
    CHECK(std::stod(io::format_double(v)) == v);
  }
}
