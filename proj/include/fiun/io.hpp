// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace fiun {

// Little-endian binary file helpers. The build targets little-endian
// hosts; a static_assert in io.cpp enforces it.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);
    void magic(const char tag[8]);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void i32(int32_t v);
    void f32(float v);
    void f64(double v);
    void f64_array(const std::vector<double>& v);
    void f32_array(const std::vector<float>& v);
    void i32_array(const std::vector<int32_t>& v);
    void close();

private:
    void raw(const void* p, size_t n);
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);
    void expect_magic(const char tag[8]);
    uint32_t u32();
    uint64_t u64();
    int32_t i32();
    float f32();
    double f64();
    std::vector<double> f64_array(size_t n);
    std::vector<float> f32_array(size_t n);
    std::vector<int32_t> i32_array(size_t n);
    bool peek_magic(const char tag[8]); // non-consuming; false on short file

private:
    void raw(void* p, size_t n);
    std::ifstream in_;
    std::string path_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace fiun
