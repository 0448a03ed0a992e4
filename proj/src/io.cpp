#include "defkit/io.hpp"

#include "defkit/warp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace defkit {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error(ErrorKind::Truncated, std::string("short read in ") + what);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  read_exact(in, reinterpret_cast<char*>(b.data()), 4, "header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void check_side(Eigen::Index side) {
  if (side < 1) throw Error(ErrorKind::InvalidValue, "grid dimensions must be >= 1");
  if (static_cast<std::uint64_t>(side) > kMaxSide) {
    throw Error(ErrorKind::DimensionOverflow, "side " + std::to_string(side) + " exceeds 65536");
  }
}

void write_header(std::ostream& out, Eigen::Index h, Eigen::Index w, std::uint8_t components) {
  check_side(h);
  check_side(w);
  out.write(kGridMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  out.put(static_cast<char>(components));
}

void write_component(std::ostream& out, const Grid& g) {
  std::vector<char> buf(static_cast<std::size_t>(g.size()) * 4);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(g(r, c)));
      buf[k++] = static_cast<char>(bits & 0xff);
      buf[k++] = static_cast<char>((bits >> 8) & 0xff);
      buf[k++] = static_cast<char>((bits >> 16) & 0xff);
      buf[k++] = static_cast<char>((bits >> 24) & 0xff);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Grid read_component(std::istream& in, const FieldFileHeader& hdr) {
  const std::size_t n = static_cast<std::size_t>(hdr.height) * hdr.width;
  std::vector<unsigned char> buf(n * 4);
  read_exact(in, reinterpret_cast<char*>(buf.data()), buf.size(), "grid data");
  Grid g(hdr.height, hdr.width);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    g.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  if (!g.isFinite().all()) throw Error(ErrorKind::InvalidValue, "grid file contains non-finite values");
  return g;
}

void expect_end(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::TrailingData, "unexpected bytes after grid data");
}

FieldFileHeader read_header_expect(std::istream& in, std::uint8_t components) {
  const FieldFileHeader hdr = read_header(in);
  if (hdr.components != components) {
    throw Error(ErrorKind::ComponentMismatch, "expected " + std::to_string(components) + " component(s), found " +
                                                  std::to_string(hdr.components));
  }
  return hdr;
}

void check_stream(const std::ostream& out, const std::string& path) {
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot create '" + path + "'");
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

FieldFileHeader read_header(std::istream& in) {
  char magic[8];
  read_exact(in, magic, 8, "magic");
  if (std::memcmp(magic, kGridMagic, 8) != 0) throw Error(ErrorKind::BadMagic, "not a DEFKFLD1 grid file");
  FieldFileHeader hdr;
  hdr.height = get_u32(in);
  hdr.width = get_u32(in);
  const int comp = in.get();
  if (comp == std::char_traits<char>::eof()) throw Error(ErrorKind::Truncated, "short read in header");
  hdr.components = static_cast<std::uint8_t>(comp);
  check_side(hdr.height);
  check_side(hdr.width);
  return hdr;
}

void write_raster(std::ostream& out, const Raster& img) {
  write_header(out, img.height(), img.width(), 1);
  write_component(out, img.data());
}

Raster read_raster(std::istream& in) {
  const FieldFileHeader hdr = read_header_expect(in, 1);
  Grid g = read_component(in, hdr);
  expect_end(in);
  return Raster(std::move(g));
}

void write_field(std::ostream& out, const DisplacementField& df) {
  write_header(out, df.height(), df.width(), 2);
  write_component(out, df.u());
  write_component(out, df.v());
}

DisplacementField read_field(std::istream& in) {
  const FieldFileHeader hdr = read_header_expect(in, 2);
  Grid u = read_component(in, hdr);
  Grid v = read_component(in, hdr);
  expect_end(in);
  return DisplacementField(std::move(u), std::move(v));
}

void write_mask(std::ostream& out, const RegionMask& mask) {
  write_header(out, mask.height(), mask.width(), 1);
  write_component(out, mask.bits().cast<double>());
}

RegionMask read_mask(std::istream& in) {
  const FieldFileHeader hdr = read_header_expect(in, 1);
  const Grid g = read_component(in, hdr);
  expect_end(in);
  if (!(g == 0.0 || g == 1.0).all()) throw Error(ErrorKind::InvalidValue, "mask values must be 0 or 1");
  return RegionMask(BoolGrid(g == 1.0));
}

void write_pgm(std::ostream& out, const Raster& img, int maxval) {
  if (maxval < 1 || maxval > 65535) throw Error(ErrorKind::InvalidValue, "PGM maxval must lie in [1, 65535]");
  check_side(img.height());
  check_side(img.width());
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::vector<char> buf;
  buf.reserve(static_cast<std::size_t>(img.data().size()) * (wide ? 2 : 1));
  for (Eigen::Index r = 0; r < img.height(); ++r) {
    for (Eigen::Index c = 0; c < img.width(); ++c) {
      const auto q = static_cast<unsigned>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * maxval));
      if (wide) buf.push_back(static_cast<char>((q >> 8) & 0xff));
      buf.push_back(static_cast<char>(q & 0xff));
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

long read_pgm_number(std::istream& in) {
  int ch = in.get();
  for (;;) {
    if (ch == '#') {
      while (ch != '\n' && ch != std::char_traits<char>::eof()) ch = in.get();
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == std::char_traits<char>::eof()) throw Error(ErrorKind::Truncated, "short PGM header");
  if (ch < '0' || ch > '9') throw Error(ErrorKind::BadMagic, "malformed PGM header");
  long value = 0;
  while (ch >= '0' && ch <= '9') {
    value = value * 10 + (ch - '0');
    if (value > 1000000) throw Error(ErrorKind::DimensionOverflow, "PGM header value too large");
    ch = in.get();
  }
  if (ch == std::char_traits<char>::eof()) throw Error(ErrorKind::Truncated, "short PGM header");
  return value;  // the single whitespace after the number has been consumed
}

}  // namespace

Raster read_pgm(std::istream& in) {
  char magic[2];
  read_exact(in, magic, 2, "PGM magic");
  if (magic[0] != 'P' || magic[1] != '5') throw Error(ErrorKind::BadMagic, "not a binary PGM (P5) file");
  const long w = read_pgm_number(in);
  const long h = read_pgm_number(in);
  const long maxval = read_pgm_number(in);
  check_side(h);
  check_side(w);
  if (maxval < 1 || maxval > 65535) throw Error(ErrorKind::InvalidValue, "PGM maxval must lie in [1, 65535]");
  const bool wide = maxval > 255;
  const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  std::vector<unsigned char> buf(n * (wide ? 2 : 1));
  read_exact(in, reinterpret_cast<char*>(buf.data()), buf.size(), "PGM data");
  Grid g(h, w);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned q = wide ? (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1] : buf[i];
    g.data()[i] = static_cast<double>(q) / static_cast<double>(maxval);
  }
  return Raster(std::move(g));
}

void write_raster_file(const std::string& path, const Raster& img) {
  auto out = open_out(path);
  if (ends_with(path, ".pgm")) {
    write_pgm(out, img);
  } else {
    write_raster(out, img);
  }
  check_stream(out, path);
}

Raster read_raster_file(const std::string& path) {
  auto in = open_in(path);
  if (in.peek() == 'P') return read_pgm(in);
  return read_raster(in);
}

void write_field_file(const std::string& path, const DisplacementField& df) {
  auto out = open_out(path);
  write_field(out, df);
  check_stream(out, path);
}

DisplacementField read_field_file(const std::string& path) {
  auto in = open_in(path);
  return read_field(in);
}

void write_mask_file(const std::string& path, const RegionMask& mask) {
  auto out = open_out(path);
  write_mask(out, mask);
  check_stream(out, path);
}

RegionMask read_mask_file(const std::string& path) {
  auto in = open_in(path);
  return read_mask(in);
}

std::vector<ProfileSample> extract_profile(const DisplacementField& df, const ProfileLine& line, int samples) {
  if (samples < 2) throw Error(ErrorKind::InvalidValue, "a profile needs at least 2 samples");
  if (!(line.length >= 0.0) || !std::isfinite(line.x) || !std::isfinite(line.y) || !std::isfinite(line.angle)) {
    throw Error(ErrorKind::InvalidValue, "invalid profile line");
  }
  const double dx = std::cos(line.angle);
  const double dy = std::sin(line.angle);
  std::vector<ProfileSample> rows;
  rows.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double s = line.length * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double px = line.x + (s - 0.5 * line.length) * dx;
    const double py = line.y + (s - 0.5 * line.length) * dy;
    const Sample su = bilinear_sample(df.u(), px, py);
    if (!su.in_bounds) {
      throw Error(ErrorKind::LineOutOfBounds, "profile sample (" + format_g9(px) + ", " + format_g9(py) +
                                                  ") lies outside the field");
    }
    rows.push_back(ProfileSample{s, su.value, bilinear_sample(df.v(), px, py).value});
  }
  return rows;
}

std::string format_g9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileSample>& rows) {
  out << "s,u,v\n";
  for (const auto& r : rows) out << format_g9(r.s) << ',' << format_g9(r.u) << ',' << format_g9(r.v) << '\n';
}

void write_report_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << "estimator,regularizer,bucket,epe,smoothness_near_fault,smoothness_non_fault,pixels_near_fault,"
         "pixels_non_fault\n";
  for (const auto& r : reports) {
    out << r.estimator_name << ',' << r.regularizer_name << ',' << to_string(r.bucket) << ',' << format_g9(r.epe)
        << ',' << format_g9(r.smoothness_near_fault) << ',' << format_g9(r.smoothness_non_fault) << ','
        << r.pixels_near_fault << ',' << r.pixels_non_fault << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  auto out = open_out(path);
  out << contents;
  check_stream(out, path);
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace defkit
