#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/tensor.hpp"

namespace seerdrive::io {

// All binary artifacts are little-endian with f32 numeric payloads. Numeric
// state is kept f32-snapped in memory (see snap_to_f32), so write/read
// round-trips are bit-exact.

// FNV-1a 64-bit over a string; used for config hashes.
uint64_t fnv1a(const std::string& s);
std::string hex64(uint64_t v);

// Streaming CRC32 (zlib) writer/reader over a binary file.
class Writer {
 public:
  explicit Writer(const std::string& path);
  ~Writer();
  void u8(uint8_t v);
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i32(int32_t v);
  void i64(int64_t v);
  void f32(float v);
  void f64(double v);
  void str(const std::string& s);                  // u32 length + bytes
  void f32_array(const double* p, int64_t n);      // doubles narrowed to f32
  void i32_array(const int32_t* p, int64_t n);
  void bytes(const void* p, size_t n);
  uint32_t crc() const { return crc_; }
  void finish_with_crc();                          // appends crc32 (not self-included)
  size_t bytes_written() const { return written_; }

 private:
  void raw(const void* p, size_t n, bool checksummed);
  std::ofstream out_;
  std::string path_;
  uint32_t crc_ = 0;
  size_t written_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& path);
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  int32_t i32();
  int64_t i64();
  float f32();
  double f64();
  std::string str();
  std::vector<double> f32_array(int64_t n);        // widened back to double
  std::vector<int32_t> i32_array(int64_t n);
  void check_trailing_crc();                       // reads u32 and compares
  bool at_end();
  const std::string& path() const { return path_; }

 private:
  void raw(void* p, size_t n);
  std::vector<char> buf_;
  size_t pos_ = 0;
  std::string path_;
  uint32_t crc_ = 0;
};

uint32_t crc32_of_file(const std::string& path);

// Shape-tagged tensor block: u8 ndim, u32 dims[], f32 payload.
void write_tensor(Writer& w, const Tensor& t);
Tensor read_tensor(Reader& r);

}  // namespace seerdrive::io
