#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace laps::detail {

// Little-endian encoder over an in-memory buffer.
class ByteWriter {
 public:
  void magic(std::string_view m);
  void u32(std::uint32_t v);
  void f32(float v);
  void u32s(const std::vector<std::uint32_t>& v);
  void f32s(const std::vector<float>& v);

  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

// Little-endian decoder; every read is bounds-checked and throws DataError
// naming `what` when the payload runs short.
class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string what);

  void expect_magic(std::string_view m);
  std::uint32_t u32();
  float f32();
  std::vector<std::uint32_t> u32s(std::size_t n);
  std::vector<float> f32s(std::size_t n);
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace laps::detail
