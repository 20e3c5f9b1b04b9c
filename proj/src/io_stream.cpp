#include "io_stream.hpp"

#include <zlib.h>

#include <new>

#include "kmf/error.hpp"

namespace kmf::detail {

namespace {

// zlib state goes through operator new so the allocation counters see it.
voidpf z_alloc(voidpf, uInt items, uInt size) { return ::operator new(static_cast<std::size_t>(items) * size, std::nothrow); }
void z_free(voidpf, voidpf p) { ::operator delete(p); }

constexpr int kGzipWindow = 15 + 16;

}  // namespace

struct OutStream::Deflater {
  z_stream s{};
  std::unique_ptr<char[]> out{new char[kSize]};
};

OutStream::OutStream(std::ostream& os, bool gzip) : os_(os), buf_(new char[kSize]) {
  if (gzip) {
    z_ = std::make_unique<Deflater>();
    z_->s.zalloc = z_alloc;
    z_->s.zfree = z_free;
    if (deflateInit2(&z_->s, Z_DEFAULT_COMPRESSION, Z_DEFLATED, kGzipWindow, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
      throw Error(ErrorKind::io, "cannot initialise gzip compressor");
    }
  }
}

OutStream::~OutStream() {
  if (z_) deflateEnd(&z_->s);
}

void OutStream::write_slow(std::string_view s) {
  while (!s.empty()) {
    if (pos_ == kSize) drain();
    const std::size_t n = std::min(s.size(), kSize - pos_);
    std::char_traits<char>::copy(buf_.get() + pos_, s.data(), n);
    pos_ += n;
    s.remove_prefix(n);
  }
}

void OutStream::emit(const char* data, std::size_t n) {
  os_.write(data, static_cast<std::streamsize>(n));
  if (!os_) throw Error(ErrorKind::io, "write to output stream failed");
}

void OutStream::drain() {
  if (!z_) {
    emit(buf_.get(), pos_);
    pos_ = 0;
    return;
  }
  z_->s.next_in = reinterpret_cast<Bytef*>(buf_.get());
  z_->s.avail_in = static_cast<uInt>(pos_);
  do {
    z_->s.next_out = reinterpret_cast<Bytef*>(z_->out.get());
    z_->s.avail_out = static_cast<uInt>(kSize);
    deflate(&z_->s, Z_NO_FLUSH);
    emit(z_->out.get(), kSize - z_->s.avail_out);
  } while (z_->s.avail_out == 0);
  pos_ = 0;
}

void OutStream::finish() {
  if (finished_) return;
  finished_ = true;
  if (!z_) {
    emit(buf_.get(), pos_);
    pos_ = 0;
    os_.flush();
    if (!os_) throw Error(ErrorKind::io, "flush of output stream failed");
    return;
  }
  z_->s.next_in = reinterpret_cast<Bytef*>(buf_.get());
  z_->s.avail_in = static_cast<uInt>(pos_);
  int rc;
  do {
    z_->s.next_out = reinterpret_cast<Bytef*>(z_->out.get());
    z_->s.avail_out = static_cast<uInt>(kSize);
    rc = deflate(&z_->s, Z_FINISH);
    emit(z_->out.get(), kSize - z_->s.avail_out);
  } while (rc == Z_OK);
  if (rc != Z_STREAM_END) throw Error(ErrorKind::io, "gzip compression failed");
  pos_ = 0;
  os_.flush();
}

struct InStream::Inflater {
  z_stream s{};
  std::unique_ptr<char[]> in{new char[kSize]};
  bool done = false;
};

InStream::InStream(std::istream& is) : is_(is), buf_(new char[kSize]) {}

InStream::~InStream() {
  if (z_) inflateEnd(&z_->s);
}

std::size_t InStream::read_raw(char* dst, std::size_t n) {
  is_.read(dst, static_cast<std::streamsize>(n));
  if (is_.bad()) throw Error(ErrorKind::io, "read from input stream failed");
  return static_cast<std::size_t>(is_.gcount());
}

bool InStream::fill() {
  if (!probed_) {
    probed_ = true;
    // Read a first chunk raw and look for the gzip magic bytes.
    const std::size_t n = read_raw(buf_.get(), kSize);
    if (n >= 2 && static_cast<unsigned char>(buf_[0]) == 0x1f && static_cast<unsigned char>(buf_[1]) == 0x8b) {
      z_ = std::make_unique<Inflater>();
      z_->s.zalloc = z_alloc;
      z_->s.zfree = z_free;
      if (inflateInit2(&z_->s, kGzipWindow) != Z_OK) throw Error(ErrorKind::io, "cannot initialise gzip decompressor");
      std::char_traits<char>::copy(z_->in.get(), buf_.get(), n);
      z_->s.next_in = reinterpret_cast<Bytef*>(z_->in.get());
      z_->s.avail_in = static_cast<uInt>(n);
    } else {
      pos_ = 0;
      end_ = n;
      return n > 0;
    }
  }
  if (!z_) {
    pos_ = 0;
    end_ = read_raw(buf_.get(), kSize);
    return end_ > 0;
  }
  pos_ = end_ = 0;
  while (end_ == 0 && !z_->done) {
    if (z_->s.avail_in == 0) {
      const std::size_t n = read_raw(z_->in.get(), kSize);
      if (n == 0) throw Error(ErrorKind::io, "truncated gzip stream");
      z_->s.next_in = reinterpret_cast<Bytef*>(z_->in.get());
      z_->s.avail_in = static_cast<uInt>(n);
    }
    z_->s.next_out = reinterpret_cast<Bytef*>(buf_.get());
    z_->s.avail_out = static_cast<uInt>(kSize);
    const int rc = inflate(&z_->s, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) {
      z_->done = true;
    } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
      throw Error(ErrorKind::io, "corrupt gzip stream");
    }
    end_ = kSize - z_->s.avail_out;
  }
  return end_ > 0;
}

}  // namespace kmf::detail
