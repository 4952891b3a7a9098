// Copyright 2026 The sspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSPK_IO_HPP_
#define SSPK_IO_HPP_

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace sspk {

// Little-endian binary stream wrappers used by every on-disk format
// (corpus archives, checkpoints, backend parameters, embedding tables).
// Reads validate stream health after every primitive and report the byte
// offset of the first failure.

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);

  void write_u8(uint8_t v);
  void write_u32(uint32_t v);
  void write_u64(uint64_t v);
  void write_i32(int32_t v);
  void write_i64(int64_t v);
  void write_f32(float v);
  void write_f64(double v);
  void write_bytes(const void* data, size_t n);
  void write_f32_span(std::span<const float> v);
  void write_f64_span(std::span<const double> v);
  void write_i32_span(std::span<const int32_t> v);
  void write_string(const std::string& s);  // u32 length + bytes

  void close();  // flushes; throws on failure
  uint64_t offset() const { return offset_; }

 private:
  std::ofstream out_;
  std::string path_;
  uint64_t offset_ = 0;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);

  uint8_t read_u8();
  uint32_t read_u32();
  uint64_t read_u64();
  int32_t read_i32();
  int64_t read_i64();
  float read_f32();
  double read_f64();
  void read_bytes(void* data, size_t n);
  void read_f32_span(std::span<float> v);
  void read_f64_span(std::span<double> v);
  void read_i32_span(std::span<int32_t> v);
  std::string read_string(uint32_t max_len = (1u << 20));

  bool at_eof();                // true when no bytes remain
  uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

  // Prefix for error messages: "<path> at byte <offset>".
  std::string where() const;

 private:
  std::ifstream in_;
  std::string path_;
  uint64_t offset_ = 0;
};

// Reads an entire file as raw bytes (for byte-identity comparisons and
// config echoing).
std::vector<char> read_file_bytes(const std::string& path);

}  // namespace sspk

#endif  // SSPK_IO_HPP_
