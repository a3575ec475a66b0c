#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "laps/errors.hpp"

namespace laps::detail {

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffU) << 24) | ((v & 0xff00U) << 8) | ((v >> 8) & 0xff00U) | (v >> 24);
  }
}

}  // namespace

void ByteWriter::magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

void ByteWriter::u32(std::uint32_t v) {
  v = to_le(v);
  char raw[4];
  std::memcpy(raw, &v, 4);
  buf_.insert(buf_.end(), raw, raw + 4);
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::u32s(const std::vector<std::uint32_t>& v) {
  buf_.reserve(buf_.size() + v.size() * 4);
  for (auto x : v) u32(x);
}

void ByteWriter::f32s(const std::vector<float>& v) {
  buf_.reserve(buf_.size() + v.size() * 4);
  for (auto x : v) f32(x);
}

ByteReader::ByteReader(std::vector<char> bytes, std::string what)
    : buf_(std::move(bytes)), what_(std::move(what)) {}

void ByteReader::need(std::size_t n) const {
  if (buf_.size() - pos_ < n) throw DataError(what_ + ": payload truncated");
}

void ByteReader::expect_magic(std::string_view m) {
  if (buf_.size() < m.size() || std::string_view(buf_.data(), m.size()) != m) {
    throw DataError(what_ + ": magic number mismatch (expected " + std::string(m) + ")");
  }
  pos_ = m.size();
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, buf_.data() + pos_, 4);
  pos_ += 4;
  return to_le(v);
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::vector<std::uint32_t> ByteReader::u32s(std::size_t n) {
  need(n * 4);
  std::vector<std::uint32_t> out(n);
  for (auto& x : out) x = u32();
  return out;
}

std::vector<float> ByteReader::f32s(std::size_t n) {
  need(n * 4);
  std::vector<float> out(n);
  for (auto& x : out) x = f32();
  return out;
}

void ByteReader::expect_end() const {
  if (pos_ != buf_.size()) throw DataError(what_ + ": trailing bytes after payload");
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace laps::detail
