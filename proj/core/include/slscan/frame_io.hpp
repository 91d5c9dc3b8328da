#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slscan/frame_set.hpp"
#include "slscan/patterns.hpp"
#include "slscan/sync.hpp"

namespace slscan {

// Frame manifest (JSON), paths relative to the manifest:
//
//   {"width": 640, "height": 480, "bit_depth": 16,
//    "pattern": {"orientation": "vertical", "steps": 3, "n_fringe": 16,
//                "projector_width": 912, "projector_height": 1140},
//    "frames": [{"file": "frame_00.pgm", "timestamp": 0.0}, ...],
//    "valid_mask": "valid.pgm"}          // optional
//
// Every image must match "width" and "height"; a mismatch is reported with the
// offending field named.

struct FrameWriteOptions {
  int bit_depth = 16;
  std::string extension = "pgm";
};

/// Writes the images and "frames.json" into `directory`; returns the manifest path.
std::filesystem::path write_frame_set(const std::filesystem::path& directory, const FrameSet& frames,
                                      const FrameWriteOptions& options = {});
FrameSet read_frame_set(const std::filesystem::path& manifest);

std::string pattern_spec_to_json(const PatternSpec& spec);
PatternSpec pattern_spec_from_json(const std::string& text);

// Sync manifest (JSON):
//
//   {"sequence_length": 6, "dt_img": 0.0333, "tol_lower": 0.0067, "tol_upper": 0.0067,
//    "triggers": [{"t": 0.0, "sequence": 0, "index": 1}, ...],
//    "images": [{"t": 0.001, "id": 0}, ...]}
//
// Tolerances default to 0.2 * dt_img. Streams are sorted by time on load.

struct SyncStreams {
  int sequence_length = 6;
  SyncConfig config;
  std::vector<TriggerEvent> triggers;
  std::vector<TimedImage> images;
};

SyncStreams read_sync_manifest(const std::filesystem::path& path);
void write_sync_manifest(const std::filesystem::path& path, const SyncStreams& streams);

}  // namespace slscan
