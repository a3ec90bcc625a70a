#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "smoments/cursor.hpp"
#include "smoments/l2hh.hpp"
#include "smoments/misra_gries.hpp"
#include "smoments/stream.hpp"

namespace smoments {

struct HhrConfig {
  double p = 1.0;
  double heaviness = 0.5;      // c0: report items with f^p >= c0 * F_p
  double m_hat = 1.0;          // length prior
  double f_prior = 1.0;        // F_p prior
  std::uint64_t universe = 2;
  std::uint64_t seed = 0;
  double c1 = 4.0;             // trunks t = ceil(c1 * log2 n)
  double c2 = 0.25;            // survivor threshold, a constant <= c0
  double c3 = 3.0;             // trunk-length floor exponent
  std::uint32_t trunk_keep = 2;  // candidates fed to the survivor table per trunk
  double hh_eps = 0.25;
  double hh_delta = 0.01;
  L2hhOptions hh_opts{};
};

// Heavy hitter search for random order streams: t consecutive trunks of m1
// updates, a fresh l2 heavy hitter sketch per trunk, and a Misra-Gries table
// accumulating each trunk's top candidates. Consumes at most t * m1 updates;
// running out of stream first is the caller's Fail.
class Hhr {
 public:
  explicit Hhr(const HhrConfig& cfg) : cfg_(cfg), survivors_(cfg.c2) {
    double lg = std::log2(static_cast<double>(cfg.universe < 2 ? 2 : cfg.universe));
    double by_prior =
        cfg.m_hat * cfg.m_hat / std::pow(cfg.f_prior, 2.0 / cfg.p);
    double floor_len = std::pow(lg, cfg.c3);
    trunk_len_ = static_cast<std::uint64_t>(std::ceil(std::max(by_prior, floor_len)));
    if (trunk_len_ == 0) trunk_len_ = 1;
    trunks_ = static_cast<std::uint64_t>(std::ceil(cfg.c1 * lg));
    if (trunks_ == 0) trunks_ = 1;
    start_trunk();
  }

  void update(ItemId a) {
    if (done()) return;
    ++consumed_;
    detector_->update(a);
    ++in_trunk_;
    if (in_trunk_ == trunk_len_) finish_trunk();
  }

  bool done() const { return trunks_done_ == trunks_; }

  // Survivor set; only meaningful once done.
  std::vector<ItemId> result() const { return survivors_.query(); }

  std::uint64_t consumed() const { return consumed_; }
  std::uint64_t trunk_length() const { return trunk_len_; }
  std::uint64_t trunks() const { return trunks_; }
  std::uint64_t budget() const { return trunks_ * trunk_len_; }

  std::uint64_t bits_live() const {
    std::uint64_t b = survivors_.bits_live(cfg_.universe) + 256;
    if (detector_) b += detector_->bits_live();
    return b;
  }

 private:
  void start_trunk() {
    detector_ = std::make_unique<L2HeavyHitters>(
        cfg_.hh_eps, cfg_.hh_delta, cfg_.universe,
        derive_seed(cfg_.seed, trunks_done_), cfg_.hh_opts);
    in_trunk_ = 0;
  }

  void finish_trunk() {
    auto found = detector_->query();
    std::uint32_t kept = 0;
    for (const auto& [id, est] : found) {
      if (kept++ == cfg_.trunk_keep) break;
      survivors_.update(id);
    }
    ++trunks_done_;
    if (!done()) start_trunk();
    else detector_.reset();
  }

  HhrConfig cfg_;
  std::uint64_t trunk_len_ = 1;
  std::uint64_t trunks_ = 1;
  std::uint64_t trunks_done_ = 0;
  std::uint64_t in_trunk_ = 0;
  std::uint64_t consumed_ = 0;
  std::unique_ptr<L2HeavyHitters> detector_;
  MisraGries survivors_;
};

// Pull runner over a cursor. nullopt = the stream ended before t trunks.
inline std::optional<std::vector<ItemId>> hhr_run(const HhrConfig& cfg,
                                                  StreamCursor& cursor) {
  Hhr state(cfg);
  while (!state.done()) {
    auto a = cursor.next();
    if (!a) return std::nullopt;
    state.update(*a);
  }
  return state.result();
}

}  // namespace smoments
