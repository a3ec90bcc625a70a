#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "smoments/stream.hpp"

namespace smoments {

// Binary stream files: 16-byte header (8-byte magic "RSTRM1\0\0", u64 LE
// universe size), then the updates as little-endian u64.
inline constexpr std::array<char, 8> kStreamMagic = {'R', 'S', 'T', 'R', 'M',
                                                     '1', '\0', '\0'};

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (!is) throw std::runtime_error("stream file: truncated u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_stream_binary(const Stream& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kStreamMagic.data(), kStreamMagic.size());
  detail::put_u64_le(os, s.universe);
  for (ItemId a : s.updates) detail::put_u64_le(os, a);
}

inline void write_stream_text(const Stream& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (ItemId a : s.updates) os << a << '\n';
}

inline Stream read_stream_binary(std::istream& is) {
  std::array<char, 8> magic;
  is.read(magic.data(), magic.size());
  if (!is || magic != kStreamMagic)
    throw std::runtime_error("stream file: bad magic");
  Stream s;
  s.universe = detail::get_u64_le(is);
  while (true) {
    is.peek();
    if (is.eof()) break;
    s.updates.push_back(detail::get_u64_le(is));
  }
  return s;
}

inline Stream read_stream_text(std::istream& is, std::uint64_t universe = 0) {
  Stream s;
  std::uint64_t max_id = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::uint64_t v = std::stoull(line);
    if (v == 0) throw std::runtime_error("stream file: item ids are 1-based");
    s.updates.push_back(v);
    max_id = std::max(max_id, v);
  }
  s.universe = universe ? universe : max_id;
  return s;
}

// Sniffs the binary magic, falls back to text.
inline Stream read_stream(const std::string& path, std::uint64_t universe = 0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::array<char, 8> head{};
  is.read(head.data(), head.size());
  std::size_t got = static_cast<std::size_t>(is.gcount());
  is.clear();
  is.seekg(0);
  if (got == head.size() && head == kStreamMagic) return read_stream_binary(is);
  return read_stream_text(is, universe);
}

}  // namespace smoments
