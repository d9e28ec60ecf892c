#include "textclf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "textclf/errors.hpp"

namespace textclf::ckpt {

namespace {

constexpr char kMagic[8] = {'N', 'N', 'C', 'K', '0', '0', '0', '1'};

void put_u64le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw DataError("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void save(const std::vector<NamedTensorData>& tensors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u64le(out, tensors.size());
  for (const auto& t : tensors) {
    put_u64le(out, t.name.size());
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u64le(out, t.shape.size());
    for (const auto d : t.shape) put_u64le(out, static_cast<std::uint64_t>(d));
    if (static_cast<std::int64_t>(t.values.size()) != numel(t.shape)) {
      throw std::invalid_argument("checkpoint: tensor " + t.name + " has inconsistent buffer");
    }
    for (const double v : t.values) put_u64le(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

std::vector<NamedTensorData> load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  const auto count = get_u64le(in);
  std::vector<NamedTensorData> tensors;
  tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensorData t;
    const auto name_len = get_u64le(in);
    t.name.resize(name_len);
    in.read(t.name.data(), static_cast<std::streamsize>(name_len));
    if (!in) throw DataError("checkpoint: unexpected end of file");
    const auto rank = get_u64le(in);
    t.shape.resize(rank);
    for (auto& d : t.shape) d = static_cast<std::int64_t>(get_u64le(in));
    const auto n = numel(t.shape);
    t.values.resize(static_cast<std::size_t>(n));
    for (auto& v : t.values) v = std::bit_cast<double>(get_u64le(in));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void expect_layout(const std::vector<NamedTensorData>& data,
                   const std::vector<std::pair<std::string, Shape>>& expected) {
  if (data.size() != expected.size()) {
    throw DataError("checkpoint: expected " + std::to_string(expected.size()) +
                    " tensors, found " + std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (data[i].name != expected[i].first) {
      throw DataError("checkpoint: tensor " + std::to_string(i) + " is named '" + data[i].name +
                      "', expected '" + expected[i].first + "'");
    }
    if (data[i].shape != expected[i].second) {
      throw DataError("checkpoint: tensor '" + data[i].name + "' has shape " +
                      shape_str(data[i].shape) + ", expected " + shape_str(expected[i].second));
    }
  }
}

}  // namespace textclf::ckpt
