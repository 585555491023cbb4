#include "seerdrive/core/serialize.hpp"

#include <zlib.h>

#include <cstring>

namespace seerdrive::io {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = d[v & 0xf];
    v >>= 4;
  }
  return s;
}

Writer::Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw IoError("cannot open for write: " + path);
  crc_ = static_cast<uint32_t>(::crc32(0L, Z_NULL, 0));
}

Writer::~Writer() = default;

void Writer::raw(const void* p, size_t n, bool checksummed) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed: " + path_);
  if (checksummed) {
    crc_ = static_cast<uint32_t>(
        ::crc32(crc_, static_cast<const Bytef*>(p), static_cast<uInt>(n)));
  }
  written_ += n;
}

void Writer::u8(uint8_t v) { raw(&v, 1, true); }
void Writer::u16(uint16_t v) { raw(&v, 2, true); }
void Writer::u32(uint32_t v) { raw(&v, 4, true); }
void Writer::u64(uint64_t v) { raw(&v, 8, true); }
void Writer::i32(int32_t v) { raw(&v, 4, true); }
void Writer::i64(int64_t v) { raw(&v, 8, true); }
void Writer::f32(float v) { raw(&v, 4, true); }
void Writer::f64(double v) { raw(&v, 8, true); }

void Writer::str(const std::string& s) {
  u32(static_cast<uint32_t>(s.size()));
  if (!s.empty()) raw(s.data(), s.size(), true);
}

void Writer::f32_array(const double* p, int64_t n) {
  std::vector<float> tmp(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) tmp[static_cast<size_t>(i)] = static_cast<float>(p[i]);
  if (n > 0) raw(tmp.data(), tmp.size() * sizeof(float), true);
}

void Writer::i32_array(const int32_t* p, int64_t n) {
  if (n > 0) raw(p, static_cast<size_t>(n) * sizeof(int32_t), true);
}

void Writer::bytes(const void* p, size_t n) { raw(p, n, true); }

void Writer::finish_with_crc() {
  uint32_t c = crc_;
  raw(&c, 4, false);
}

Reader::Reader(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open for read: " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  buf_.resize(static_cast<size_t>(size));
  if (size > 0 && !in.read(buf_.data(), size)) throw IoError("read failed: " + path);
  crc_ = static_cast<uint32_t>(::crc32(0L, Z_NULL, 0));
}

void Reader::raw(void* p, size_t n) {
  if (pos_ + n > buf_.size()) throw TruncatedError(path_);
  std::memcpy(p, buf_.data() + pos_, n);
  crc_ = static_cast<uint32_t>(
      ::crc32(crc_, reinterpret_cast<const Bytef*>(buf_.data() + pos_), static_cast<uInt>(n)));
  pos_ += n;
}

uint8_t Reader::u8() { uint8_t v; raw(&v, 1); return v; }
uint16_t Reader::u16() { uint16_t v; raw(&v, 2); return v; }
uint32_t Reader::u32() { uint32_t v; raw(&v, 4); return v; }
uint64_t Reader::u64() { uint64_t v; raw(&v, 8); return v; }
int32_t Reader::i32() { int32_t v; raw(&v, 4); return v; }
int64_t Reader::i64() { int64_t v; raw(&v, 8); return v; }
float Reader::f32() { float v; raw(&v, 4); return v; }
double Reader::f64() { double v; raw(&v, 8); return v; }

std::string Reader::str() {
  const uint32_t n = u32();
  std::string s(n, '\0');
  if (n > 0) raw(s.data(), n);
  return s;
}

std::vector<double> Reader::f32_array(int64_t n) {
  std::vector<float> tmp(static_cast<size_t>(n));
  if (n > 0) raw(tmp.data(), tmp.size() * sizeof(float));
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = tmp[static_cast<size_t>(i)];
  return out;
}

std::vector<int32_t> Reader::i32_array(int64_t n) {
  std::vector<int32_t> v(static_cast<size_t>(n));
  if (n > 0) raw(v.data(), v.size() * sizeof(int32_t));
  return v;
}

void Reader::check_trailing_crc() {
  const uint32_t computed = crc_;
  uint32_t stored;
  if (pos_ + 4 > buf_.size()) throw TruncatedError(path_);
  std::memcpy(&stored, buf_.data() + pos_, 4);
  pos_ += 4;
  if (stored != computed) throw ChecksumError(path_);
}

bool Reader::at_end() { return pos_ >= buf_.size(); }

uint32_t crc32_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path);
  uint32_t crc = static_cast<uint32_t>(::crc32(0L, Z_NULL, 0));
  char chunk[65536];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    crc = static_cast<uint32_t>(
        ::crc32(crc, reinterpret_cast<const Bytef*>(chunk), static_cast<uInt>(in.gcount())));
    if (in.eof()) break;
  }
  return crc;
}

void write_tensor(Writer& w, const Tensor& t) {
  w.u8(static_cast<uint8_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) w.u32(static_cast<uint32_t>(t.dim(i)));
  w.f32_array(t.data(), t.numel());
}

Tensor read_tensor(Reader& r) {
  const int nd = r.u8();
  std::vector<int64_t> shape(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) shape[static_cast<size_t>(i)] = r.u32();
  const int64_t n = numel_of(shape);
  return Tensor(std::move(shape), r.f32_array(n));
}

}  // namespace seerdrive::io
