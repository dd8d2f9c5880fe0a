#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpr/grid.hpp"
#include "gpr/projector.hpp"

namespace gpr::io {

// GPR1 container: the 4-byte magic "GPR1", a little-endian uint32 header
// length, that many bytes of UTF-8 JSON, then row-major little-endian f64
// payload. One object per file.
struct Record {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_record(const std::filesystem::path& path, const Record& rec);
Record read_record(const std::filesystem::path& path);

void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

// Payload holds the vx plane followed by the vy plane.
void write_vector_field(const std::filesystem::path& path, const VectorField& v);
VectorField read_vector_field(const std::filesystem::path& path);

void write_sinogram(const std::filesystem::path& path, const Sinogram& s);
Sinogram read_sinogram(const std::filesystem::path& path);

nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json geometry_to_json(const ProjGeometry& g);
ProjGeometry geometry_from_json(const nlohmann::json& j);

// 16-bit binary PGM, min-max scaled to [0, 65535], with the scaling written
// to "<path>.json" so pixel values can be mapped back.
void export_pgm16(const std::filesystem::path& path, const Image& img);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Shortest round-trip decimal form with 17 significant digits.
std::string format_double(double v);

}  // namespace gpr::io
