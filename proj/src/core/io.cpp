#include "gpr/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

namespace gpr::io {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'R', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  return os;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

void expect_kind(const Record& rec, const char* kind, const std::filesystem::path& path) {
  if (rec.header.value("kind", std::string()) != kind) {
    fail(ErrorKind::Io, path.string() + ": expected kind '" + kind + "'");
  }
}

}  // namespace

void write_record(const std::filesystem::path& path, const Record& rec) {
  const std::string header = rec.header.dump();
  std::string buf(kMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(header.size()));
  buf += header;
  buf.reserve(buf.size() + 8 * rec.payload.size());
  for (double v : rec.payload) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  auto os = open_out(path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

Record read_record(const std::filesystem::path& path) {
  const std::string buf = slurp(path);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 8 || buf.compare(0, 4, kMagic, 4) != 0) {
    fail(ErrorKind::Io, path.string() + ": not a GPR1 container");
  }
  const std::uint32_t hlen = get_u32(p + 4);
  if (buf.size() < 8 + static_cast<std::size_t>(hlen)) fail(ErrorKind::Io, path.string() + ": truncated header");
  Record rec;
  try {
    rec.header = nlohmann::json::parse(buf.substr(8, hlen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, path.string() + ": malformed header: " + e.what());
  }
  if (rec.header.value("dtype", std::string()) != "f64") fail(ErrorKind::Io, path.string() + ": dtype must be f64");
  const std::size_t body = buf.size() - 8 - hlen;
  if (body % 8 != 0) fail(ErrorKind::Io, path.string() + ": payload is not a whole number of f64");
  rec.payload.resize(body / 8);
  const unsigned char* q = p + 8 + hlen;
  for (std::size_t k = 0; k < rec.payload.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(q[8 * k + i]) << (8 * i);
    rec.payload[k] = std::bit_cast<double>(bits);
  }
  return rec;
}

nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"nx", g.nx()}, {"ny", g.ny()}, {"extent", {g.extent_x(), g.extent_y()}}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  try {
    const auto& e = j.at("extent");
    return GridSpec(j.at("nx").get<int>(), j.at("ny").get<int>(), e.at(0).get<double>(), e.at(1).get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed grid header: ") + e.what());
  }
}

nlohmann::json geometry_to_json(const ProjGeometry& g) {
  return {{"n_angles", g.n_angles()},
          {"n_tang", g.n_tang()},
          {"tang_extent", g.tang_extent()},
          {"image", grid_to_json(g.grid())}};
}

ProjGeometry geometry_from_json(const nlohmann::json& j) {
  try {
    return ProjGeometry(grid_from_json(j.at("image")), j.at("n_angles").get<int>(), j.at("n_tang").get<int>(),
                        j.at("tang_extent").get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed geometry header: ") + e.what());
  }
}

void write_image(const std::filesystem::path& path, const Image& img) {
  nlohmann::json h = grid_to_json(img.grid());
  h["kind"] = "image";
  h["dtype"] = "f64";
  write_record(path, Record{h, {img.values().begin(), img.values().end()}});
}

Image read_image(const std::filesystem::path& path) {
  Record rec = read_record(path);
  expect_kind(rec, "image", path);
  const GridSpec g = grid_from_json(rec.header);
  if (rec.payload.size() != g.size()) fail(ErrorKind::Io, path.string() + ": payload size mismatch");
  return Image(g, std::move(rec.payload));
}

void write_vector_field(const std::filesystem::path& path, const VectorField& v) {
  nlohmann::json h = grid_to_json(v.grid());
  h["kind"] = "vector_field";
  h["dtype"] = "f64";
  std::vector<double> payload(v.vx().values().begin(), v.vx().values().end());
  payload.insert(payload.end(), v.vy().values().begin(), v.vy().values().end());
  write_record(path, Record{h, std::move(payload)});
}

VectorField read_vector_field(const std::filesystem::path& path) {
  Record rec = read_record(path);
  expect_kind(rec, "vector_field", path);
  const GridSpec g = grid_from_json(rec.header);
  if (rec.payload.size() != 2 * g.size()) fail(ErrorKind::Io, path.string() + ": payload size mismatch");
  const auto mid = rec.payload.begin() + static_cast<std::ptrdiff_t>(g.size());
  return VectorField(Image(g, std::vector<double>(rec.payload.begin(), mid)),
                     Image(g, std::vector<double>(mid, rec.payload.end())));
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& s) {
  nlohmann::json h = geometry_to_json(s.geometry());
  h["kind"] = "sinogram";
  h["dtype"] = "f64";
  write_record(path, Record{h, {s.values().begin(), s.values().end()}});
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  Record rec = read_record(path);
  expect_kind(rec, "sinogram", path);
  const ProjGeometry g = geometry_from_json(rec.header);
  if (rec.payload.size() != g.size()) fail(ErrorKind::Io, path.string() + ": payload size mismatch");
  return Sinogram(g, std::move(rec.payload));
}

void export_pgm16(const std::filesystem::path& path, const Image& img) {
  const double lo = img.min();
  const double hi = img.max();
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
  const GridSpec& g = img.grid();
  std::string buf = "P5\n" + std::to_string(g.nx()) + " " + std::to_string(g.ny()) + "\n65535\n";
  // PGM stores the top row first; row iy = ny-1 is the top of the image.
  for (int iy = g.ny() - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const auto q = static_cast<std::uint16_t>(std::lround((img(ix, iy) - lo) * scale));
      buf.push_back(static_cast<char>(q >> 8));
      buf.push_back(static_cast<char>(q & 0xFF));
    }
  }
  auto os = open_out(path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  write_json(path.string() + ".json", {{"min", lo}, {"max", hi}, {"levels", 65535}, {"row_order", "top_to_bottom"}});
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, path.string() + ": malformed JSON: " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace gpr::io
