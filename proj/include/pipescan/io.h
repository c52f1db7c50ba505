#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pipescan/forward.h"
#include "pipescan/imaging.h"

namespace pipescan::io {

// Binary containers. All integers and doubles little-endian; each file ends
// with a JSON trailer holding the axes/metadata.
//
//   MWBS  header(16): "MWBS" u16 version=1, u32 n_f, u32 n_s, u16 reserved
//         payload: row-major complex<double> interleaved (re, im)
//         trailer: {"freq_hz": [...], "pos_m": [...], "provenance": "..."}
//   MWIM  header(14): "MWIM" u16 version=1, u32 nx, u32 nz
//         payload: row-major double, rows = z index
//         trailer: {"grid": {...}, "band_index": ..., "pipeline": {...}}

void write_mwbs(const std::filesystem::path& path, const BScan& bscan);
BScan read_mwbs(const std::filesystem::path& path);

struct ImageMeta {
  int band_index = -1;
  std::string pipeline;  // JSON text of the producing pipeline options, "" = {}
};

void write_mwim(const std::filesystem::path& path, const Image& image,
                const ImageMeta& meta = {});
Image read_mwim(const std::filesystem::path& path, ImageMeta* meta = nullptr);

// 8-bit grayscale PGM (P5), values scaled by the image max.
void write_pgm(const std::filesystem::path& path, const Image& image);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pipescan::io
