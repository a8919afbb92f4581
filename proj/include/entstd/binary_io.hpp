#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/errors.hpp"
#include "entstd/hash.hpp"

namespace entstd::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline constexpr std::size_t kMagicSize = 12;
inline constexpr std::uint32_t kFormatVersion = 1;

// Every file starts with 12 magic bytes and a u32 format version (16 bytes).
inline constexpr std::string_view kIndexMagic = "entstd.index";
inline constexpr std::string_view kModelMagic = "entstd.model";
inline constexpr std::string_view kCacheMagic = "entstd.cache";

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f32(float v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void header(std::string_view magic) {
    bytes(magic.data(), kMagicSize);
    u32(kFormatVersion);
  }

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

  // Appends the FNV-1a digest of everything written so far.
  void seal() { u64(fnv1a64(std::span<const std::uint8_t>(buf_))); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError("short write to " + path.string());
  }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> data, std::string name = "<buffer>")
      : buf_(std::move(data)), name_(std::move(name)) {}

  static Reader from_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError(path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return Reader(std::move(data), path.string());
  }

  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void expect_header(std::string_view magic) {
    std::array<char, kMagicSize> m{};
    bytes(m.data(), m.size());
    if (std::string_view(m.data(), m.size()) != magic)
      throw CorruptFileError(name_ + ": bad magic, expected " + std::string(magic));
    const std::uint32_t version = u32();
    if (version != kFormatVersion)
      throw CorruptFileError(name_ + ": unsupported format version " + std::to_string(version));
  }

  // Checks the trailing 64-bit digest over all preceding bytes. Call before
  // parsing the body so no partially decoded object escapes.
  void verify_digest() {
    if (buf_.size() < sizeof(std::uint64_t) + kMagicSize + 4)
      throw CorruptFileError(name_ + ": truncated");
    const std::size_t body = buf_.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + body, sizeof stored);
    const auto actual = fnv1a64(std::span<const std::uint8_t>(buf_.data(), body));
    if (stored != actual) throw CorruptFileError(name_ + ": digest mismatch");
    end_ = body;
  }

  std::uint64_t stored_digest() const {
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + end_, sizeof stored);
    return stored;
  }

  bool at_end() const noexcept { return pos_ == end_; }
  std::size_t remaining() const noexcept { return end_ - pos_; }
  const std::string& name() const noexcept { return name_; }

 private:
  template <class T>
  T get() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw CorruptFileError(name_ + ": truncated");
  }

  std::vector<std::uint8_t> buf_;
  std::string name_;
  std::size_t pos_ = 0;
  std::size_t end_ = buf_.size();
};

}  // namespace entstd::binary
