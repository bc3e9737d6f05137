#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

// Small file helpers shared by the command-line driver and the tests:
// flat binary field dumps (row-major node order, 64-bit little-endian
// floats) and the FNV-1a hash used to fingerprint experiment configs.

namespace eklab {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; byte swapping is not wired up");

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

inline void write_field_binary(const std::filesystem::path& path,
                               const Eigen::ArrayXd& field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(field.data()),
            static_cast<std::streamsize>(sizeof(double)) * field.size());
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Eigen::ArrayXd read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  const auto bytes = static_cast<std::uint64_t>(in.tellg());
  if (bytes % sizeof(double) != 0)
    throw std::runtime_error("field file size is not a multiple of 8 bytes: " +
                             path.string());
  Eigen::ArrayXd field(static_cast<Eigen::Index>(bytes / sizeof(double)));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(field.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + path.string());
  return field;
}

}  // namespace eklab
