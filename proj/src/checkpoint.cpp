#include "daef/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace daef {

namespace {

constexpr const char* kMagic = "DAEFORMER-CKPT v1";

void put_f64(std::string& blob, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) blob.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw CheckpointError("checkpoint: truncated blob");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& params) {
  out << kMagic << '\n' << params.size() << '\n';
  std::size_t offset = 0;
  for (const auto& [name, t] : params.entries()) {
    out << name << ' ' << t.rank();
    for (std::size_t e : t.shape()) out << ' ' << e;
    out << ' ' << offset << '\n';
    offset += t.numel();
  }
  std::string blob;
  blob.reserve(offset * 8);
  for (const auto& [name, t] : params.entries()) {
    for (double v : t.data()) put_f64(blob, v);
  }
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("checkpoint: write failed");
}

void write_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

void read_checkpoint(std::istream& in, ParamStore& params) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw CheckpointError("checkpoint: bad header");
  if (!std::getline(in, line)) throw CheckpointError("checkpoint: missing entry count");
  std::size_t count = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> count)) throw CheckpointError("checkpoint: bad entry count");
  }
  if (count != params.size()) {
    throw CheckpointError("checkpoint: " + std::to_string(count) + " entries, store has " +
                          std::to_string(params.size()));
  }
  std::size_t expected_offset = 0;
  for (const auto& [name, t] : params.entries()) {
    if (!std::getline(in, line)) throw CheckpointError("checkpoint: truncated manifest");
    std::istringstream ls(line);
    std::string got;
    std::size_t rank = 0;
    ls >> got >> rank;
    Shape shape(rank);
    for (auto& e : shape) ls >> e;
    std::size_t offset = 0;
    ls >> offset;
    if (!ls) throw CheckpointError("checkpoint: malformed manifest line '" + line + "'");
    if (got != name || shape != t.shape() || offset != expected_offset) {
      throw CheckpointError("checkpoint: entry '" + got + "' " + shape_str(shape) +
                            " does not match '" + name + "' " + shape_str(t.shape()));
    }
    expected_offset += t.numel();
  }
  for (const auto& [name, t] : params.entries()) {
    Tensor target = t;
    auto buf = target.mutable_data();
    for (auto& v : buf) v = get_f64(in);
  }
}

void read_checkpoint(const std::filesystem::path& path, ParamStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  read_checkpoint(in, params);
}

}  // namespace daef
