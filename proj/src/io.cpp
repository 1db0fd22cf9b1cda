#include "epirisk/io.hpp"

#include <sys/stat.h>
#include <sys/types.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace epirisk {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, bool append) {
  if (append) {
    std::FILE* probe = std::fopen(path.c_str(), "r");
    if (probe) {
      fresh_ = false;
      std::fclose(probe);
    }
  }
  f_ = std::fopen(path.c_str(), append ? "a" : "w");
  if (!f_) throw std::runtime_error("cannot open for writing: " + path);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) std::fputc(',', f_);
    std::fputs(cells[k].c_str(), f_);
  }
  std::fputc('\n', f_);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void ensure_directory(const std::string& path) {
  std::string partial;
  for (std::size_t k = 0; k <= path.size(); ++k) {
    if (k == path.size() || path[k] == '/') {
      if (!partial.empty() && partial != ".") {
        ::mkdir(partial.c_str(), 0755);  // EEXIST is fine
      }
    }
    if (k < path.size()) partial.push_back(path[k]);
  }
}

std::string path_join(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (a.back() == '/') return a + b;
  return a + "/" + b;
}

}  // namespace epirisk
