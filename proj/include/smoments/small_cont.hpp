#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "smoments/bounded_count_sketch.hpp"
#include "smoments/l2hh.hpp"
#include "smoments/levels.hpp"
#include "smoments/p_inverse.hpp"
#include "smoments/stream.hpp"

namespace smoments {

struct SmallContConfig {
  double p = 1.0;
  double eps = 0.25;
  std::uint64_t universe = 2;
  std::uint32_t k = 2;
  LevelParams params;
  std::uint64_t seed = 0;
  std::uint32_t cs_rows = 3;
  double cs_width_factor = 3.0;   // floor width = ceil(factor / eps^2)
  std::uint32_t cs_width_cap = 8192;
  double quota_factor = 8.0;      // per-(level, rep) detector bit budget
  double prior_slack_bits = 0.0;  // 0 = log2(C) + 8, the prior looseness
  bool collision_audit = false;
  std::size_t profile_cache_cap = 1u << 16;
};

// Contributions from levels at or below w0. One bounded CountSketch per
// populated level counts raw item frequencies over a hashed id space, sized
// to the level's expected occupancy; per (level, repetition) a compact
// detector flags candidate ids until its bit quota runs out. At query time
// each candidate's finite CountSketch value is scaled by X_i^{(r)}.
class SmallCont {
 public:
  SmallCont(const SmallContConfig& cfg, std::shared_ptr<const PInverseSampler> sampler)
      : cfg_(cfg),
        sampler_(std::move(sampler)),
        levels_(cfg.params.w0 + 1),
        id_hash_(derive_seed(cfg.seed, 7000), hashed_universe(cfg)) {
    if (cfg_.cs_rows == 0 || cfg_.cs_rows > 8 || cfg_.params.w0 > 250)
      throw std::invalid_argument("SmallCont: dimensions out of range");
    cs_width_floor_ = static_cast<std::uint32_t>(
        std::ceil(cfg_.cs_width_factor / (cfg_.eps * cfg_.eps)));
    double lg = std::log2(static_cast<double>(cfg_.universe < 4 ? 4 : cfg_.universe));
    double w0 = std::max<double>(2, cfg_.params.w0);
    quota_bits_ = cfg_.quota_factor * w0 * std::log2(w0) *
                  (std::log2(lg) + std::log2(1.0 / cfg_.eps));
  }

  static std::uint64_t hashed_universe(const SmallContConfig& cfg) {
    double u = std::pow(static_cast<double>(cfg.params.w0) / cfg.eps, 4.0);
    return static_cast<std::uint64_t>(
        std::clamp(u, 64.0, static_cast<double>(1ULL << 30)));
  }

  void update(ItemId a) {
    ++seen_;
    const Profile* prof = cached_profile(a);
    if (!prof) {
      Profile scratch;
      build_profile(a, scratch);
      apply(a, scratch);
      return;
    }
    apply(a, *prof);
  }

  // Scaled candidate values; nullopt only when the collision audit is on and
  // two distinct candidate ids shared a hashed id.
  std::optional<std::vector<double>> query() const {
    std::vector<double> out;
    bool collision = false;
    for (std::uint32_t w = 0; w < levels_.size(); ++w) {
      const LevelState& lvl = levels_[w];
      if (!lvl.cs) continue;
      std::unordered_map<std::uint64_t, ItemId> seen_hashed;
      for (std::uint32_t r = 0; r < lvl.dets.size(); ++r) {
        const Det* det = lvl.dets[r].get();
        if (!det) continue;
        const ItemId* ids = det->quota_dead ? det->harvest_id() : det->cand_id;
        for (std::uint32_t c = 0; c < CompactL2hh::kCandidates; ++c) {
          ItemId id = ids[c];
          if (id == 0) continue;
          std::uint64_t hid = id_hash_(id);
          if (cfg_.collision_audit) {
            auto [it, fresh] = seen_hashed.emplace(hid, id);
            if (!fresh && it->second != id) collision = true;
          }
          auto f = lvl.cs->query(hid);
          if (!f || *f <= 0.0) continue;  // infinity marker or noise
          out.push_back(sampler_->sample(id, r + 1) * (*f));
        }
      }
    }
    if (collision) return std::nullopt;
    return out;
  }

  std::uint64_t updates_seen() const { return seen_; }
  double quota_bits() const { return quota_bits_; }

  std::uint64_t consumed_of(std::uint32_t w, std::uint32_t r) const {
    const auto& dets = levels_.at(w).dets;
    return (r < dets.size() && dets[r]) ? dets[r]->consumed : 0;
  }

  bool quota_hit(std::uint32_t w, std::uint32_t r) const {
    const auto& dets = levels_.at(w).dets;
    return r < dets.size() && dets[r] && dets[r]->quota_dead;
  }

  std::uint64_t bits_live() const {
    std::uint64_t b = 512;
    for (const auto& lvl : levels_) {
      if (lvl.cs) b += lvl.cs->bits_live();
      for (const auto& det : lvl.dets) {
        if (!det) continue;
        if (det->quota_dead)
          b += CompactL2hh::kCandidates * (bits_for_universe(cfg_.universe) + 32) + 32;
        else
          b += det->bits_live(cfg_.universe);
      }
    }
    return b;
  }

  std::size_t detector_instances() const {
    std::size_t c = 0;
    for (const auto& lvl : levels_)
      for (const auto& det : lvl.dets)
        if (det) ++c;
    return c;
  }

 private:
  static constexpr std::uint8_t kNoLevel = 255;

  // Detector instance plus its frozen harvest once the quota fires.
  struct Det : CompactL2hh {
    ItemId frozen_id[kCandidates] = {0, 0};
    const ItemId* harvest_id() const { return frozen_id; }
  };

  struct RepSlot {
    Det* det = nullptr;  // null when the level is beyond w0 or untracked
    CompactL2hh::Slot cells{};
  };

  struct CsSlot {
    std::uint8_t level = 0;
    std::uint32_t idx[8] = {0};
    float sgn[8] = {0};
  };

  struct Profile {
    std::vector<RepSlot> reps;
    std::vector<CsSlot> cs_slots;
  };

  struct LevelState {
    std::unique_ptr<BoundedCountSketch> cs;
    std::vector<std::unique_ptr<Det>> dets;
  };

  void apply(ItemId a, const Profile& prof) {
    for (const CsSlot& cs : prof.cs_slots)
      levels_[cs.level].cs->update_prehashed(cs.idx, cs.sgn, 1.0);
    for (const RepSlot& slot : prof.reps) {
      Det* det = slot.det;
      if (!det || det->quota_dead) continue;
      det->update(a, slot.cells);
      if ((det->consumed & 63) == 0 && det->bits_live(cfg_.universe) > quota_bits_)
        retire(*det);
    }
  }

  void retire(Det& det) {
    det.frozen_id[0] = det.cand_id[0];
    det.frozen_id[1] = det.cand_id[1];
    det.quota_dead = true;
  }

  const Profile* cached_profile(ItemId a) {
    auto it = profiles_.find(a);
    if (it != profiles_.end()) return &it->second;
    if (profiles_.size() >= cfg_.profile_cache_cap) return nullptr;
    Profile prof;
    build_profile(a, prof);
    return &profiles_.emplace(a, std::move(prof)).first->second;
  }

  void build_profile(ItemId a, Profile& prof) {
    prof.reps.resize(cfg_.k);
    std::uint64_t hid = id_hash_(a);
    bool level_used[256] = {false};
    for (std::uint32_t r = 1; r <= cfg_.k; ++r) {
      double x = sampler_->sample(a, r);
      auto w = level_of(cfg_.params, x);
      if (!w || *w > cfg_.params.w0) continue;
      level_used[*w] = true;
      Det& det = ensure_det(*w, r - 1);
      RepSlot& slot = prof.reps[r - 1];
      slot.det = &det;
      slot.cells = det.slot_for(a);
    }
    for (std::uint32_t w = 0; w <= cfg_.params.w0 && w < 256; ++w) {
      if (!level_used[w]) continue;
      ensure_cs(w);
      CsSlot cs;
      cs.level = static_cast<std::uint8_t>(w);
      levels_[w].cs->cells_for(hid, cs.idx, cs.sgn);
      prof.cs_slots.push_back(cs);
    }
  }

  Det& ensure_det(std::uint32_t w, std::uint32_t r) {
    LevelState& lvl = levels_[w];
    if (lvl.dets.empty()) lvl.dets.resize(cfg_.k);
    if (!lvl.dets[r]) {
      auto det = std::make_unique<Det>();
      det->seed = derive_seed(cfg_.seed, (static_cast<std::uint64_t>(w) << 32) | r);
      lvl.dets[r] = std::move(det);
    }
    return *lvl.dets[r];
  }

  // Width follows the level's expected item occupancy so that candidate
  // counts stay collision-dominated rather than noise-dominated.
  std::uint32_t width_for_level(std::uint32_t w) const {
    double anchor_mass = std::pow(cfg_.params.anchor(), cfg_.p);
    double per_rep = std::exp2(w > 0 ? static_cast<double>(w) - 1.0 : 0.0) / anchor_mass;
    double occupancy = static_cast<double>(cfg_.universe) *
                       (1.0 - std::exp(-std::min(1.0, per_rep) * cfg_.k));
    double width = std::clamp(4.0 * occupancy, static_cast<double>(cs_width_floor_),
                              static_cast<double>(cfg_.cs_width_cap));
    return static_cast<std::uint32_t>(width);
  }

  void ensure_cs(std::uint32_t w) {
    LevelState& lvl = levels_[w];
    if (lvl.cs) return;
    double slack = cfg_.prior_slack_bits > 0
                       ? cfg_.prior_slack_bits
                       : std::log2(std::max(2.0, cfg_.params.scale_c)) + 8.0;
    auto cap_bits = static_cast<std::uint32_t>(std::clamp(
        std::ceil((static_cast<double>(w) + 1.0) / cfg_.p + slack), 4.0, 62.0));
    lvl.cs = std::make_unique<BoundedCountSketch>(
        cfg_.cs_rows, width_for_level(w), cap_bits, derive_seed(cfg_.seed, 5000 + w));
  }

  SmallContConfig cfg_;
  std::shared_ptr<const PInverseSampler> sampler_;
  std::vector<LevelState> levels_;
  PairwiseHash id_hash_;
  std::uint32_t cs_width_floor_ = 16;
  double quota_bits_ = 1024.0;
  std::uint64_t seen_ = 0;
  std::unordered_map<ItemId, Profile> profiles_;
};

}  // namespace smoments
