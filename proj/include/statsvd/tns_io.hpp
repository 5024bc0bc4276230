#pragma once

#include "statsvd/tensor.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace statsvd {

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary dense tensor: "TNS1", u32 order, order x u64 dims, then the entries
/// as f64 in row-major order (last index fastest). All integers little endian.
std::string encode_tns(const Tensor& t);
Tensor decode_tns(const std::string& bytes);

Tensor read_tns(const std::filesystem::path& path);
void write_tns(const std::filesystem::path& path, const Tensor& t);

/// Long-format CSV: a header naming the modes and the value column, then one
/// row per entry "i_1,...,i_d,value" with 0-based indices. Every entry of the
/// implied box must appear exactly once.
struct LongTable {
  std::vector<std::string> mode_names;
  std::string value_name = "value";
  Tensor tensor;
};

LongTable parse_long_csv(const std::string& text);
std::string format_long_csv(const LongTable& table);
LongTable read_long_csv(const std::filesystem::path& path);

/// Reads .tns, or long-format CSV when the extension is .csv.
Tensor read_tensor_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace statsvd
