#include "slscan/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "slscan/error.hpp"

namespace slscan {

void SyncConfig::validate() const {
  if (!(dt_img > 0.0)) throw ConfigError("sync: dt_img must be positive");
  if (!(tol_lower >= 0.0) || !(tol_upper >= 0.0)) throw ConfigError("sync: tolerances must be >= 0");
}

double match_residual(double t_c, const TriggerEvent& trigger, const SyncConfig& config) {
  return t_c - (trigger.t_p + (trigger.pattern_index - 1) * config.dt_img);
}

bool match_image(double t_c, const TriggerEvent& trigger, const SyncConfig& config) {
  const double r = match_residual(t_c, trigger, config);
  return -config.tol_lower <= r && r <= config.tol_upper;
}

FrameSetAssembler::FrameSetAssembler(int sequence_length, SyncConfig config)
    : sequence_length_(sequence_length), config_(config) {
  if (sequence_length < 1) throw ConfigError("sync: sequence length must be >= 1");
  config_.validate();
}

void FrameSetAssembler::push_trigger(const TriggerEvent& trigger) {
  if (trigger.pattern_index < 1 || trigger.pattern_index > sequence_length_) {
    throw DataError("sync: trigger pattern index " + std::to_string(trigger.pattern_index) + " out of range");
  }
  if (!std::isfinite(trigger.t_p)) throw DataError("sync: non-finite trigger time");
  auto [it, inserted] = pending_.try_emplace(trigger.sequence_id);
  Pending& p = it->second;
  if (inserted) {
    p.slots.resize(static_cast<std::size_t>(sequence_length_));
    p.first_trigger = trigger.t_p;
  }
  p.first_trigger = std::min(p.first_trigger, trigger.t_p);
  auto& slot = p.slots[static_cast<std::size_t>(trigger.pattern_index - 1)];
  if (!slot) slot = Slot{trigger, std::nullopt, false};
  advance(clock_, false);
}

void FrameSetAssembler::push_image(TimedImage image) {
  if (!std::isfinite(image.t_c)) throw DataError("sync: non-finite image timestamp");
  clock_ = std::max(clock_, image.t_c);
  buffer_.push_back(std::move(image));
  advance(clock_, false);
}

void FrameSetAssembler::flush() { advance(std::numeric_limits<double>::infinity(), true); }

SyncOutput FrameSetAssembler::take() {
  SyncOutput out = std::move(out_);
  out_ = SyncOutput{};
  return out;
}

void FrameSetAssembler::decide(std::int64_t sequence, Pending& pending, int slot_index) {
  Slot& slot = *pending.slots[static_cast<std::size_t>(slot_index)];
  slot.decided = true;
  auto best = buffer_.end();
  double best_abs = 0.0;
  std::vector<std::int64_t> matching;
  for (auto it = buffer_.begin(); it != buffer_.end(); ++it) {
    if (!match_image(it->t_c, slot.trigger, config_)) continue;
    matching.push_back(it->id);
    const double a = std::abs(match_residual(it->t_c, slot.trigger, config_));
    if (best == buffer_.end() || a < best_abs || (a == best_abs && it->t_c < best->t_c)) {
      best = it;
      best_abs = a;
    }
  }
  if (best == buffer_.end()) return;
  if (matching.size() > 1) {
    SyncConflict c{sequence, slot_index + 1, best->id, {}};
    for (auto id : matching) {
      if (id != best->id) c.rejected_images.push_back(id);
    }
    out_.conflicts.push_back(std::move(c));
  }
  slot.image = std::move(*best);
  buffer_.erase(best);
}

void FrameSetAssembler::advance(double now, bool final) {
  // Decide every slot whose window has closed, in order of expected time.
  std::vector<std::tuple<double, std::int64_t, int>> due;
  for (auto& [seq, p] : pending_) {
    for (int i = 0; i < sequence_length_; ++i) {
      const auto& slot = p.slots[static_cast<std::size_t>(i)];
      if (!slot || slot->decided) continue;
      const double expected = slot->trigger.t_p + i * config_.dt_img;
      if (final || expected + config_.tol_upper < now) due.emplace_back(expected, seq, i);
    }
  }
  std::sort(due.begin(), due.end());
  for (const auto& [expected, seq, i] : due) decide(seq, pending_.at(seq), i);

  // Finalize sequences in first-trigger order; stop at the first one still open.
  std::vector<std::pair<double, std::int64_t>> order;
  for (const auto& [seq, p] : pending_) order.emplace_back(p.first_trigger, seq);
  std::sort(order.begin(), order.end());
  for (const auto& [first, seq] : order) {
    Pending& p = pending_.at(seq);
    const double closes = first + (sequence_length_ - 1) * config_.dt_img + config_.tol_upper;
    bool open = !final && !(closes < now);
    for (const auto& slot : p.slots) open = open || (slot && !slot->decided);
    if (open) break;

    std::vector<int> missing;
    for (int i = 0; i < sequence_length_; ++i) {
      const auto& slot = p.slots[static_cast<std::size_t>(i)];
      if (!slot || !slot->image) missing.push_back(i + 1);
    }
    if (missing.empty()) {
      SyncedSet set{seq, {}, p.first_trigger};
      for (auto& slot : p.slots) set.images.push_back(std::move(*slot->image));
      out_.sets.push_back(std::move(set));
    } else {
      bool any_trigger_missing = false;
      for (int i : missing) any_trigger_missing = any_trigger_missing || !p.slots[static_cast<std::size_t>(i - 1)];
      out_.incomplete.push_back({seq, std::move(missing),
                                 any_trigger_missing ? "missing trigger or image" : "no image matched the slot"});
      // Images already claimed by a discarded sequence are not reused.
      for (auto& slot : p.slots) {
        if (slot && slot->image) out_.unmatched_images.push_back(slot->image->id);
      }
    }
    pending_.erase(seq);
  }
  release_images(now, final);
}

void FrameSetAssembler::release_images(double now, bool final) {
  const double horizon = sequence_length_ * config_.dt_img + config_.tol_lower + config_.tol_upper;
  while (!buffer_.empty() && (final || buffer_.front().t_c < now - horizon)) {
    out_.unmatched_images.push_back(buffer_.front().id);
    buffer_.pop_front();
  }
}

SyncOutput assemble(const std::vector<TriggerEvent>& triggers, const std::vector<TimedImage>& images,
                    int sequence_length, const SyncConfig& config) {
  FrameSetAssembler assembler(sequence_length, config);
  // Merge both streams by time; a trigger at the same instant as an image goes first.
  std::size_t ti = 0;
  std::size_t ii = 0;
  while (ti < triggers.size() || ii < images.size()) {
    if (ii >= images.size() || (ti < triggers.size() && triggers[ti].t_p <= images[ii].t_c)) {
      assembler.push_trigger(triggers[ti++]);
    } else {
      assembler.push_image(images[ii++]);
    }
  }
  assembler.flush();
  return assembler.take();
}

}  // namespace slscan
