#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace epirisk {

// Round-trip-exact decimal formatting for doubles in CSV output.
std::string format_double(double x);

struct CsvWriter {
  explicit CsvWriter(const std::string& path, bool append = false);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<std::string>& cells);
  bool fresh() const { return fresh_; }

 private:
  std::FILE* f_ = nullptr;
  bool fresh_ = true;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header);

std::uint64_t fnv1a(const std::string& s);
void ensure_directory(const std::string& path);
std::string path_join(const std::string& a, const std::string& b);

inline void read_exact(void* dst, std::size_t size, std::size_t count, std::FILE* f) {
  if (std::fread(dst, size, count, f) != count)
    throw std::runtime_error("unexpected end of binary file");
}

}  // namespace epirisk
