#pragma once

#include <cstddef>
#include <optional>

#include "smoments/stream.hpp"

namespace smoments {

// Move-only one-pass reader. There is no rewind and no copy, so a position
// can never be read twice through the same cursor.
class StreamCursor {
 public:
  explicit StreamCursor(const Stream& s) : stream_(&s) {}

  StreamCursor(const StreamCursor&) = delete;
  StreamCursor& operator=(const StreamCursor&) = delete;
  StreamCursor(StreamCursor&&) = default;
  StreamCursor& operator=(StreamCursor&&) = default;

  std::optional<ItemId> next() {
    if (pos_ >= stream_->updates.size()) return std::nullopt;
    return stream_->updates[pos_++];
  }

  std::size_t consumed() const { return pos_; }
  std::size_t remaining() const { return stream_->updates.size() - pos_; }

 private:
  const Stream* stream_;
  std::size_t pos_ = 0;
};

// Counts occurrences of the target over the next m_hat updates and returns
// the raw window count. Consumes exactly min(m_hat, remaining) positions;
// when fewer than m_hat remain it returns 0. Callers rescale by m / m_hat.
inline std::uint64_t query_frequency(ItemId target, std::uint64_t m_hat,
                                     StreamCursor& cursor) {
  if (cursor.remaining() < m_hat) {
    while (cursor.next()) {
    }
    return 0;
  }
  std::uint64_t count = 0;
  for (std::uint64_t i = 0; i < m_hat; ++i) {
    auto a = cursor.next();
    if (a && *a == target) ++count;
  }
  return count;
}

}  // namespace smoments
