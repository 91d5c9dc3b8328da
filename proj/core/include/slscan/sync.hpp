#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slscan/image.hpp"

namespace slscan {

/// Projector trigger for pattern `pattern_index` (1-based) of sequence `sequence_id`.
struct TriggerEvent {
  double t_p = 0.0;  // seconds
  std::int64_t sequence_id = 0;
  int pattern_index = 1;
};

struct SyncConfig {
  double dt_img = 1.0 / 30.0;  // interval between camera triggers, seconds
  double tol_lower = 0.2 / 30.0;
  double tol_upper = 0.2 / 30.0;

  /// Tolerances at 0.2 * dt_img.
  static SyncConfig with_interval(double dt_img) { return {dt_img, 0.2 * dt_img, 0.2 * dt_img}; }
  void validate() const;
};

/// t_c - (t_p + (i - 1) dt_img).
double match_residual(double t_c, const TriggerEvent& trigger, const SyncConfig& config);

/// -tol_lower <= residual <= tol_upper.
bool match_image(double t_c, const TriggerEvent& trigger, const SyncConfig& config);

struct TimedImage {
  double t_c = 0.0;
  std::int64_t id = 0;  // caller's identifier, e.g. arrival index
  ImageHandle image;    // may be null for timestamp-only checks
};

/// One complete pattern sequence. `images[i]` fills pattern index i + 1.
struct SyncedSet {
  std::int64_t sequence_id = 0;
  std::vector<TimedImage> images;
  double first_trigger_time = 0.0;
};

struct SyncReport {
  std::int64_t sequence_id = 0;
  std::vector<int> missing_slots;  // 1-based pattern indices
  std::string reason;
};

struct SyncConflict {
  std::int64_t sequence_id = 0;
  int pattern_index = 0;
  std::int64_t kept_image = 0;
  std::vector<std::int64_t> rejected_images;
};

struct SyncOutput {
  std::vector<SyncedSet> sets;
  std::vector<SyncReport> incomplete;
  std::vector<SyncConflict> conflicts;
  std::vector<std::int64_t> unmatched_images;
};

/// Streaming grouper. Feed both time-ordered streams in any interleaving and
/// collect results with `take`. A slot is decided once the stream clock passes
/// its upper tolerance; among the images satisfying the window the smallest
/// |residual| wins (earlier timestamp on ties). A sequence is emitted only when
/// every slot is filled, otherwise it is reported and discarded. Images older
/// than one sequence duration plus tolerance that matched nothing are released.
class FrameSetAssembler {
 public:
  FrameSetAssembler(int sequence_length, SyncConfig config);

  void push_trigger(const TriggerEvent& trigger);
  void push_image(TimedImage image);
  /// Decides everything still pending.
  void flush();
  /// Moves out everything decided so far.
  SyncOutput take();

 private:
  struct Slot {
    TriggerEvent trigger;
    std::optional<TimedImage> image;
    bool decided = false;
  };
  struct Pending {
    std::vector<std::optional<Slot>> slots;  // by pattern index - 1
    double first_trigger = 0.0;
  };

  void advance(double now, bool final);
  void decide(std::int64_t sequence, Pending& pending, int slot_index);
  void release_images(double now, bool final);

  int sequence_length_;
  SyncConfig config_;
  double clock_ = -std::numeric_limits<double>::infinity();
  std::map<std::int64_t, Pending> pending_;
  std::deque<TimedImage> buffer_;
  SyncOutput out_;
};

/// Batch convenience: runs a FrameSetAssembler over both streams and flushes.
SyncOutput assemble(const std::vector<TriggerEvent>& triggers, const std::vector<TimedImage>& images,
                    int sequence_length, const SyncConfig& config);

}  // namespace slscan
