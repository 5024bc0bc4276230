#include "statsvd/tns_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace statsvd {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', '1'};

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw DataError("tns: truncated file");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

std::string encode_tns(const Tensor& t) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
  for (Index n : t.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(n));
  out.reserve(out.size() + 8 * static_cast<std::size_t>(t.size()));
  for (Index i = 0; i < t.size(); ++i) put_le<double>(out, t.data()[i]);
  return out;
}

Tensor decode_tns(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("tns: bad magic (expected TNS1)");
  std::size_t pos = 4;
  const auto d = get_le<std::uint32_t>(bytes, pos);
  if (d < 2 || d > 64) throw DataError("tns: unsupported order " + std::to_string(d));
  Shape shape;
  std::uint64_t total = 1;
  for (std::uint32_t k = 0; k < d; ++k) {
    const auto n = get_le<std::uint64_t>(bytes, pos);
    if (n == 0) throw DataError("tns: zero dimension");
    if (total > (bytes.size() / 8) / n) throw DataError("tns: dimensions exceed file size");
    total *= n;
    shape.push_back(static_cast<Index>(n));
  }
  if (bytes.size() - pos != 8 * total)
    throw DataError("tns: payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                    std::to_string(8 * total));
  Eigen::VectorXd data(static_cast<Index>(total));
  for (std::uint64_t i = 0; i < total; ++i) data[static_cast<Index>(i)] = get_le<double>(bytes, pos);
  try {
    return Tensor(shape, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("tns: ") + e.what());
  }
}

Tensor read_tns(const std::filesystem::path& path) { return decode_tns(read_file(path)); }

void write_tns(const std::filesystem::path& path, const Tensor& t) { write_file_atomic(path, encode_tns(t)); }

LongTable parse_long_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty input");
  LongTable table;
  auto header = split_csv_line(line);
  if (header.size() < 3) throw DataError("csv: header needs at least two mode columns and a value column");
  table.value_name = header.back();
  header.pop_back();
  table.mode_names = header;
  const std::size_t d = header.size();

  std::vector<std::vector<Index>> idx;
  std::vector<double> vals;
  Shape dims(d, 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != d + 1)
      throw DataError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(d + 1));
    std::vector<Index> row(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto& f = fields[k];
      long long v = -1;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || v < 0)
        throw DataError("csv: line " + std::to_string(line_no) + ": bad index '" + f + "'");
      row[k] = static_cast<Index>(v);
      dims[k] = std::max(dims[k], row[k] + 1);
    }
    const auto& f = fields[d];
    double v = 0.0;
    auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
      throw DataError("csv: line " + std::to_string(line_no) + ": bad value '" + f + "'");
    idx.push_back(std::move(row));
    vals.push_back(v);
  }
  if (vals.empty()) throw DataError("csv: no data rows");
  const Index total = shape_product(dims);
  if (static_cast<std::size_t>(total) != vals.size())
    throw DataError("csv: " + std::to_string(vals.size()) + " rows do not cover the " + shape_string(dims) +
                    " index box exactly once");
  Tensor t(dims);
  std::vector<bool> seen(static_cast<std::size_t>(total), false);
  for (std::size_t n = 0; n < vals.size(); ++n) {
    const Index lin = t.linear_index(idx[n]);
    if (seen[static_cast<std::size_t>(lin)]) throw DataError("csv: duplicate entry at data row " + std::to_string(n + 1));
    seen[static_cast<std::size_t>(lin)] = true;
    t.data()[lin] = vals[n];
  }
  table.tensor = std::move(t);
  return table;
}

std::string format_long_csv(const LongTable& table) {
  const Tensor& t = table.tensor;
  std::string out;
  for (int k = 0; k < t.order(); ++k) {
    out += k < static_cast<int>(table.mode_names.size()) ? table.mode_names[static_cast<std::size_t>(k)]
                                                         : "mode" + std::to_string(k + 1);
    out += ',';
  }
  out += table.value_name + '\n';
  std::vector<Index> id(static_cast<std::size_t>(t.order()), 0);
  char buf[64];
  for (Index lin = 0; lin < t.size(); ++lin) {
    for (Index i : id) {
      out += std::to_string(i);
      out += ',';
    }
    auto res = std::to_chars(buf, buf + sizeof buf, t.data()[lin]);
    out.append(buf, res.ptr);
    out += '\n';
    for (int k = t.order() - 1; k >= 0; --k) {
      auto& v = id[static_cast<std::size_t>(k)];
      if (++v < t.dim(k)) break;
      v = 0;
    }
  }
  return out;
}

LongTable read_long_csv(const std::filesystem::path& path) { return parse_long_csv(read_file(path)); }

Tensor read_tensor_file(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_long_csv(path).tensor;
  return read_tns(path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("error writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace statsvd
