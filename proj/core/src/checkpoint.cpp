// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "cgnerf/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "cgnerf/image.hpp"

namespace cgnerf {
namespace {

constexpr char kMagic[4] = {'C', 'G', 'N', 'F'};
constexpr std::uint8_t kDtypeFloat64 = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw CheckpointTruncatedError("checkpoint is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

const NamedTensor& Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw CheckpointMismatchError("checkpoint has no tensor '" + name + "'");
}

void Checkpoint::add(std::string name, const Tensor& t) {
  tensors.push_back(NamedTensor{std::move(name), t.shape(),
                                std::vector<double>(t.data().begin(), t.data().end())});
}

void Checkpoint::add_all(const std::string& prefix, const ParameterSet& set) {
  for (const auto& [name, t] : set.entries()) add(prefix + name, t);
}

void Checkpoint::restore(const std::string& name, Tensor& t) const {
  const NamedTensor& src = find(name);
  if (src.shape != t.shape()) {
    throw CheckpointMismatchError("tensor '" + name + "' has shape " + shape_string(src.shape) +
                                  " in the checkpoint but " + shape_string(t.shape()) +
                                  " in the model (dimension mismatch)");
  }
  std::copy(src.values.begin(), src.values.end(), t.mutable_data().begin());
}

void Checkpoint::restore_all(const std::string& prefix, ParameterSet& set) const {
  for (const auto& [name, t] : set.entries()) {
    Tensor handle = t;
    restore(prefix + name, handle);
  }
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  Writer payload;
  payload.str(checkpoint.config);
  payload.i64(checkpoint.step);
  payload.str(checkpoint.rng_state);
  payload.u32(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    if (static_cast<std::int64_t>(t.values.size()) != shape_numel(t.shape)) {
      throw CheckpointError("tensor '" + t.name + "' values do not match its shape");
    }
    payload.str(t.name);
    payload.u8(kDtypeFloat64);
    payload.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) payload.i64(d);
    for (double v : t.values) payload.f64(v);
  }
  Writer file;
  file.raw(std::string_view(kMagic, 4));
  file.u32(kCheckpointVersion);
  file.u64(payload.bytes().size());
  file.raw(payload.bytes());
  file.u32(crc32_of(payload.bytes()));
  return std::move(file.bytes());
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader header(bytes);
  if (bytes.size() < 4) throw CheckpointTruncatedError("checkpoint is truncated");
  if (std::memcmp(header.take(4).data(), kMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t length = header.u64();
  const std::string_view body = header.take(length);
  const std::uint32_t stored = header.u32();
  if (!header.done()) throw CheckpointError("trailing bytes after checkpoint");
  if (crc32_of(body) != stored) throw CheckpointChecksumError("checkpoint checksum mismatch");

  Reader in(body);
  Checkpoint c;
  c.config = in.str();
  c.step = in.i64();
  c.rng_state = in.str();
  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = in.str();
    if (in.u8() != kDtypeFloat64) throw CheckpointError("unsupported dtype in '" + t.name + "'");
    const std::uint32_t rank = in.u32();
    for (std::uint32_t k = 0; k < rank; ++k) t.shape.push_back(in.i64());
    for (auto d : t.shape) {
      if (d < 1 || d > static_cast<std::int64_t>(body.size())) {
        throw CheckpointError("invalid extent in '" + t.name + "'");
      }
    }
    const std::int64_t n = shape_numel(t.shape);
    if (n > static_cast<std::int64_t>(body.size() / 8)) throw CheckpointTruncatedError("checkpoint is truncated");
    t.values.resize(static_cast<std::size_t>(n));
    for (auto& v : t.values) v = in.f64();
    c.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw CheckpointError("unexpected bytes at end of checkpoint payload");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(bytes);
}

}  // namespace cgnerf
