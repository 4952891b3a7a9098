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

#include "sspk/io.hpp"

#include <bit>
#include <cstring>

#include "sspk/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swaps");

namespace sspk {

BinaryWriter::BinaryWriter(const std::string& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw DataError("cannot open for writing: " + path);
}

void BinaryWriter::write_bytes(const void* data, size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) throw DataError("write failed: " + path_);
  offset_ += n;
}

void BinaryWriter::write_u8(uint8_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_u32(uint32_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_u64(uint64_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_i32(int32_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_i64(int64_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_f32(float v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_f64(double v) { write_bytes(&v, sizeof v); }

void BinaryWriter::write_f32_span(std::span<const float> v) {
  if (!v.empty()) write_bytes(v.data(), v.size() * sizeof(float));
}
void BinaryWriter::write_f64_span(std::span<const double> v) {
  if (!v.empty()) write_bytes(v.data(), v.size() * sizeof(double));
}
void BinaryWriter::write_i32_span(std::span<const int32_t> v) {
  if (!v.empty()) write_bytes(v.data(), v.size() * sizeof(int32_t));
}

void BinaryWriter::write_string(const std::string& s) {
  write_u32(static_cast<uint32_t>(s.size()));
  write_bytes(s.data(), s.size());
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw DataError("close failed: " + path_);
}

BinaryReader::BinaryReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw DataError("cannot open for reading: " + path);
}

std::string BinaryReader::where() const {
  return path_ + " at byte " + std::to_string(offset_);
}

void BinaryReader::read_bytes(void* data, size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in_.gcount()) != n) {
    throw DataError("truncated read (" + std::to_string(n) + " bytes wanted) in " + where());
  }
  offset_ += n;
}

uint8_t BinaryReader::read_u8() { uint8_t v; read_bytes(&v, sizeof v); return v; }
uint32_t BinaryReader::read_u32() { uint32_t v; read_bytes(&v, sizeof v); return v; }
uint64_t BinaryReader::read_u64() { uint64_t v; read_bytes(&v, sizeof v); return v; }
int32_t BinaryReader::read_i32() { int32_t v; read_bytes(&v, sizeof v); return v; }
int64_t BinaryReader::read_i64() { int64_t v; read_bytes(&v, sizeof v); return v; }
float BinaryReader::read_f32() { float v; read_bytes(&v, sizeof v); return v; }
double BinaryReader::read_f64() { double v; read_bytes(&v, sizeof v); return v; }

void BinaryReader::read_f32_span(std::span<float> v) {
  if (!v.empty()) read_bytes(v.data(), v.size() * sizeof(float));
}
void BinaryReader::read_f64_span(std::span<double> v) {
  if (!v.empty()) read_bytes(v.data(), v.size() * sizeof(double));
}
void BinaryReader::read_i32_span(std::span<int32_t> v) {
  if (!v.empty()) read_bytes(v.data(), v.size() * sizeof(int32_t));
}

std::string BinaryReader::read_string(uint32_t max_len) {
  uint32_t n = read_u32();
  if (n > max_len) {
    throw DataError("string length " + std::to_string(n) + " exceeds limit in " + where());
  }
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}

bool BinaryReader::at_eof() {
  return in_.peek() == std::ifstream::traits_type::eof();
}

std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path);
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

}  // namespace sspk
