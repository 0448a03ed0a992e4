#pragma once

// File formats.
//
// Grid container (little-endian, platform independent):
//   bytes 0..7    magic "DEFKFLD1"
//   bytes 8..11   height, uint32
//   bytes 12..15  width, uint32
//   byte  16      components (2 for fields, 1 for rasters and masks)
//   then components * height * width float32 values, component-major,
//   each component row-major. Masks store 0.0f / 1.0f.
//
// Rasters may also be read and written as binary PGM (P5, 8 or 16 bit).

#include "defkit/core.hpp"
#include "defkit/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace defkit {

inline constexpr char kGridMagic[9] = "DEFKFLD1";
inline constexpr std::uint32_t kMaxSide = 1u << 16;

struct FieldFileHeader {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint8_t components = 0;
};

FieldFileHeader read_header(std::istream& in);

void write_raster(std::ostream& out, const Raster& img);
Raster read_raster(std::istream& in);
void write_field(std::ostream& out, const DisplacementField& df);
DisplacementField read_field(std::istream& in);
void write_mask(std::ostream& out, const RegionMask& mask);
RegionMask read_mask(std::istream& in);

void write_pgm(std::ostream& out, const Raster& img, int maxval = 255);
Raster read_pgm(std::istream& in);

/// Path helpers. Rasters are written as PGM when the path ends in ".pgm";
/// read_raster_file detects the format from the magic bytes.
void write_raster_file(const std::string& path, const Raster& img);
Raster read_raster_file(const std::string& path);
void write_field_file(const std::string& path, const DisplacementField& df);
DisplacementField read_field_file(const std::string& path);
void write_mask_file(const std::string& path, const RegionMask& mask);
RegionMask read_mask_file(const std::string& path);

struct ProfileLine {
  double x = 0.0;  // center of the line, columns
  double y = 0.0;  // rows
  double angle = 0.0;
  double length = 0.0;
};

struct ProfileSample {
  double s = 0.0;  // arc length from the first endpoint
  double u = 0.0;
  double v = 0.0;
};

/// Evenly spaced bilinear samples of u and v along a segment centered on
/// (x, y). Every sample must fall inside the field.
std::vector<ProfileSample> extract_profile(const DisplacementField& df, const ProfileLine& line, int samples);

/// CSV with header "s,u,v" and 9 significant digits.
void write_profile_csv(std::ostream& out, const std::vector<ProfileSample>& rows);

void write_report_csv(std::ostream& out, const std::vector<MetricsReport>& reports);

/// Formats with printf-style "%.9g".
std::string format_g9(double value);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace defkit
