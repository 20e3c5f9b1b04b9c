#pragma once

// Fixed-size buffered byte streams over std::istream / std::ostream, with
// optional gzip framing. Buffers are allocated once per stream, so reading or
// writing a model costs O(1) transient memory regardless of its size.

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string_view>

namespace kmf::detail {

class OutStream {
 public:
  OutStream(std::ostream& os, bool gzip);
  ~OutStream();
  OutStream(const OutStream&) = delete;
  OutStream& operator=(const OutStream&) = delete;

  void put(char c) {
    if (pos_ == kSize) drain();
    buf_[pos_++] = c;
  }
  void write(std::string_view s) {
    if (s.size() > kSize - pos_) return write_slow(s);
    std::char_traits<char>::copy(buf_.get() + pos_, s.data(), s.size());
    pos_ += s.size();
  }
  /// Flushes everything, finishing the gzip stream. Throws Error(io).
  void finish();

 private:
  static constexpr std::size_t kSize = 64 * 1024;
  void write_slow(std::string_view s);
  void drain();
  void emit(const char* data, std::size_t n);

  std::ostream& os_;
  std::unique_ptr<char[]> buf_;
  std::size_t pos_ = 0;
  struct Deflater;
  std::unique_ptr<Deflater> z_;
  bool finished_ = false;
};

/// Input with transparent gzip detection (by magic bytes) and position
/// tracking for diagnostics.
class InStream {
 public:
  explicit InStream(std::istream& is);
  ~InStream();
  InStream(const InStream&) = delete;
  InStream& operator=(const InStream&) = delete;

  static constexpr int kEof = -1;

  int peek() {
    if (pos_ == end_ && !fill()) return kEof;
    return static_cast<unsigned char>(buf_[pos_]);
  }
  int get() {
    if (pos_ == end_ && !fill()) return kEof;
    const char c = buf_[pos_++];
    ++offset_;
    if (c == '\n') ++line_;
    return static_cast<unsigned char>(c);
  }

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t line() const noexcept { return line_; }

 private:
  static constexpr std::size_t kSize = 64 * 1024;
  bool fill();
  std::size_t read_raw(char* dst, std::size_t n);

  std::istream& is_;
  std::unique_ptr<char[]> buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::uint64_t offset_ = 0;
  std::uint64_t line_ = 1;
  struct Inflater;
  std::unique_ptr<Inflater> z_;
  bool probed_ = false;
};

}  // namespace kmf::detail
