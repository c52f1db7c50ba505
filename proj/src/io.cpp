#include "pipescan/io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace pipescan::io {

namespace {

void put_u16(std::string& buf, std::uint16_t v) { buf.append(reinterpret_cast<char*>(&v), 2); }
void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<char*>(&v), 4); }

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void expect_magic(const char* magic) {
    if (bytes_.size() < pos_ + 4 || std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
      throw std::runtime_error(std::string("bad magic, expected ") + magic);
    pos_ += 4;
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  double f64() { return get<double>(); }
  void read_doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::string rest() { return bytes_.substr(pos_); }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) {
    if (bytes_.size() < pos_ + n) throw std::runtime_error("truncated file");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write to " + path.string());
}

}  // namespace

void write_mwbs(const std::filesystem::path& path, const BScan& bscan) {
  bscan.validate();
  std::string buf;
  buf.reserve(16 + bscan.data.size() * 16 + 256);
  buf.append("MWBS", 4);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(bscan.n_f()));
  put_u32(buf, static_cast<std::uint32_t>(bscan.n_s()));
  put_u16(buf, 0);
  buf.append(reinterpret_cast<const char*>(bscan.data.data()), bscan.data.size() * sizeof(cplx));

  nlohmann::json trailer;
  trailer["freq_hz"] = bscan.freq_hz;
  trailer["pos_m"] = bscan.pos_m;
  trailer["provenance"] = bscan.provenance;
  buf += trailer.dump();
  write_bytes(path, buf);
}

BScan read_mwbs(const std::filesystem::path& path) {
  Reader r(read_bytes(path));
  r.expect_magic("MWBS");
  const auto version = r.u16();
  if (version != 1) throw std::runtime_error("MWBS: unsupported version");
  const std::uint32_t nf = r.u32();
  const std::uint32_t ns = r.u32();
  r.u16();  // reserved

  BScan out;
  out.data = CMatrix(nf, ns);
  r.read_doubles(reinterpret_cast<double*>(out.data.data()), std::size_t{2} * nf * ns);

  const nlohmann::json trailer = nlohmann::json::parse(r.rest());
  out.freq_hz = trailer.at("freq_hz").get<std::vector<double>>();
  out.pos_m = trailer.at("pos_m").get<std::vector<double>>();
  out.provenance = trailer.value("provenance", "");
  out.validate();
  return out;
}

void write_mwim(const std::filesystem::path& path, const Image& image, const ImageMeta& meta) {
  image.validate();
  std::string buf;
  buf.reserve(14 + image.values.size() * 8 + 256);
  buf.append("MWIM", 4);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(image.grid.nx));
  put_u32(buf, static_cast<std::uint32_t>(image.grid.nz));
  buf.append(reinterpret_cast<const char*>(image.values.data()),
             image.values.size() * sizeof(double));

  nlohmann::json trailer;
  trailer["grid"] = {{"x_min_m", image.grid.x_min_m}, {"x_max_m", image.grid.x_max_m},
                     {"z_min_m", image.grid.z_min_m}, {"z_max_m", image.grid.z_max_m}};
  trailer["band_index"] = meta.band_index;
  trailer["pipeline"] =
      meta.pipeline.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta.pipeline);
  buf += trailer.dump();
  write_bytes(path, buf);
}

Image read_mwim(const std::filesystem::path& path, ImageMeta* meta) {
  Reader r(read_bytes(path));
  r.expect_magic("MWIM");
  const auto version = r.u16();
  if (version != 1) throw std::runtime_error("MWIM: unsupported version");
  const std::uint32_t nx = r.u32();
  const std::uint32_t nz = r.u32();

  Image out;
  out.grid.nx = static_cast<int>(nx);
  out.grid.nz = static_cast<int>(nz);
  out.values.resize(std::size_t{nx} * nz);
  r.read_doubles(out.values.data(), out.values.size());

  const nlohmann::json trailer = nlohmann::json::parse(r.rest());
  const auto& g = trailer.at("grid");
  out.grid.x_min_m = g.at("x_min_m").get<double>();
  out.grid.x_max_m = g.at("x_max_m").get<double>();
  out.grid.z_min_m = g.at("z_min_m").get<double>();
  out.grid.z_max_m = g.at("z_max_m").get<double>();
  if (meta) {
    meta->band_index = trailer.value("band_index", -1);
    meta->pipeline = trailer.contains("pipeline") ? trailer["pipeline"].dump() : "{}";
  }
  out.validate();
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  image.validate();
  double peak = 0.0;
  for (double v : image.values) peak = std::max(peak, v);
  if (peak <= 0.0) peak = 1.0;

  std::string buf = "P5\n" + std::to_string(image.grid.nx) + " " + std::to_string(image.grid.nz) +
                    "\n255\n";
  buf.reserve(buf.size() + image.values.size());
  for (double v : image.values)
    buf.push_back(static_cast<char>(static_cast<unsigned char>(
        std::clamp(std::lround(255.0 * v / peak), 0L, 255L))));
  write_bytes(path, buf);
}

std::string read_text_file(const std::filesystem::path& path) { return read_bytes(path); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, text);
}

}  // namespace pipescan::io
