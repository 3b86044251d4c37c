// SPDX-License-Identifier: Apache-2.0
#include "fiun/io.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "fiun/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace fiun {

BinaryWriter::BinaryWriter(const std::string& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
}

void BinaryWriter::raw(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed: " + path_);
}

void BinaryWriter::magic(const char tag[8]) { raw(tag, 8); }
void BinaryWriter::u32(uint32_t v) { raw(&v, sizeof v); }
void BinaryWriter::u64(uint64_t v) { raw(&v, sizeof v); }
void BinaryWriter::i32(int32_t v) { raw(&v, sizeof v); }
void BinaryWriter::f32(float v) { raw(&v, sizeof v); }
void BinaryWriter::f64(double v) { raw(&v, sizeof v); }

void BinaryWriter::f64_array(const std::vector<double>& v) {
    if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
}
void BinaryWriter::f32_array(const std::vector<float>& v) {
    if (!v.empty()) raw(v.data(), v.size() * sizeof(float));
}
void BinaryWriter::i32_array(const std::vector<int32_t>& v) {
    if (!v.empty()) raw(v.data(), v.size() * sizeof(int32_t));
}

void BinaryWriter::close() {
    out_.close();
    if (!out_) throw IoError("close failed: " + path_);
}

BinaryReader::BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open for reading: " + path);
}

void BinaryReader::raw(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) throw IoError("truncated file: " + path_);
}

void BinaryReader::expect_magic(const char tag[8]) {
    char got[8];
    raw(got, 8);
    if (std::memcmp(got, tag, 8) != 0)
        throw IoError("bad magic in " + path_ + " (expected " + std::string(tag, 8) + ")");
}

bool BinaryReader::peek_magic(const char tag[8]) {
    char got[8];
    in_.read(got, 8);
    std::streamsize n = in_.gcount();
    in_.clear();
    in_.seekg(0);
    return n == 8 && std::memcmp(got, tag, 8) == 0;
}

uint32_t BinaryReader::u32() { uint32_t v; raw(&v, sizeof v); return v; }
uint64_t BinaryReader::u64() { uint64_t v; raw(&v, sizeof v); return v; }
int32_t BinaryReader::i32() { int32_t v; raw(&v, sizeof v); return v; }
float BinaryReader::f32() { float v; raw(&v, sizeof v); return v; }
double BinaryReader::f64() { double v; raw(&v, sizeof v); return v; }

std::vector<double> BinaryReader::f64_array(size_t n) {
    std::vector<double> v(n);
    if (n) raw(v.data(), n * sizeof(double));
    return v;
}
std::vector<float> BinaryReader::f32_array(size_t n) {
    std::vector<float> v(n);
    if (n) raw(v.data(), n * sizeof(float));
    return v;
}
std::vector<int32_t> BinaryReader::i32_array(size_t n) {
    std::vector<int32_t> v(n);
    if (n) raw(v.data(), n * sizeof(int32_t));
    return v;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

} // namespace fiun
