#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "octoverify/interval.hpp"

namespace octo {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One pending box: its branch path ('0' lower, '1' upper) and the bounds of
// every variable in declaration order.
struct CheckpointBox {
  std::string path;
  std::vector<Interval> bounds;

  friend bool operator==(const CheckpointBox&, const CheckpointBox&) = default;
};

// Resumable solver state.
//
// Layout, all integers and floats little-endian:
//   "OCTOCKPT"  u32 version  u32 nvars  { u32 len, name bytes } * nvars
//   u64 fingerprint  u64 boxes_processed
//   u64 nfrontier  { u32 len, path bytes, { f64 lo, f64 hi } * nvars } * nfrontier
//   u64 ndelta     (same record layout; unrefuted boxes already at precision)
struct Checkpoint {
  static constexpr std::array<char, 8> kMagic{'O', 'C', 'T', 'O', 'C', 'K', 'P', 'T'};
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::string> variables;
  std::uint64_t fingerprint{0};
  std::uint64_t boxes_processed{0};
  std::vector<CheckpointBox> frontier;
  std::vector<CheckpointBox> delta_boxes;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& os) : os_(os) {}
  template <typename T>
  void put(T v) {
    v = to_little(v);
    os_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& is) : is_(is) {}
  template <typename T>
  T get() {
    T v;
    if (!is_.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint: truncated file");
    return to_little(v);
  }
  std::string get_string(std::uint32_t max_len) {
    const auto n = get<std::uint32_t>();
    if (n > max_len) throw CheckpointError("checkpoint: corrupt string length");
    std::string s(n, '\0');
    if (n > 0 && !is_.read(s.data(), n)) throw CheckpointError("checkpoint: truncated file");
    return s;
  }

 private:
  std::istream& is_;
};

inline void write_boxes(ByteWriter& w, const std::vector<CheckpointBox>& boxes, std::size_t nvars) {
  w.put(static_cast<std::uint64_t>(boxes.size()));
  for (const auto& b : boxes) {
    if (b.bounds.size() != nvars) throw CheckpointError("checkpoint: box does not match variable count");
    w.put_string(b.path);
    for (const auto& iv : b.bounds) {
      w.put(iv.lo);
      w.put(iv.hi);
    }
  }
}

inline std::vector<CheckpointBox> read_boxes(ByteReader& r, std::size_t nvars) {
  const auto n = r.get<std::uint64_t>();
  std::vector<CheckpointBox> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    CheckpointBox b;
    b.path = r.get_string(1u << 20);
    b.bounds.resize(nvars);
    for (auto& iv : b.bounds) {
      iv.lo = r.get<double>();
      iv.hi = r.get<double>();
      if (!(iv.lo <= iv.hi)) throw CheckpointError("checkpoint: invalid interval");
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace detail

inline void write_checkpoint(const Checkpoint& c, std::ostream& os) {
  detail::ByteWriter w(os);
  os.write(Checkpoint::kMagic.data(), Checkpoint::kMagic.size());
  w.put(Checkpoint::kVersion);
  w.put(static_cast<std::uint32_t>(c.variables.size()));
  for (const auto& v : c.variables) w.put_string(v);
  w.put(c.fingerprint);
  w.put(c.boxes_processed);
  detail::write_boxes(w, c.frontier, c.variables.size());
  detail::write_boxes(w, c.delta_boxes, c.variables.size());
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != Checkpoint::kMagic)
    throw CheckpointError("checkpoint: not a checkpoint file");
  detail::ByteReader r(is);
  if (r.get<std::uint32_t>() != Checkpoint::kVersion) throw CheckpointError("checkpoint: unsupported version");
  Checkpoint c;
  const auto nvars = r.get<std::uint32_t>();
  if (nvars > 4096) throw CheckpointError("checkpoint: corrupt variable count");
  for (std::uint32_t i = 0; i < nvars; ++i) c.variables.push_back(r.get_string(4096));
  c.fingerprint = r.get<std::uint64_t>();
  c.boxes_processed = r.get<std::uint64_t>();
  c.frontier = detail::read_boxes(r, nvars);
  c.delta_boxes = detail::read_boxes(r, nvars);
  return c;
}

// Writes via a temporary file and rename, so an interrupted write never
// replaces a good checkpoint with a partial one.
inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("checkpoint: cannot write " + tmp.string());
    write_checkpoint(c, os);
    if (!os.flush()) throw CheckpointError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot read " + path.string());
  return read_checkpoint(is);
}

}  // namespace octo
