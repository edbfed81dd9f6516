#pragma once

#include <string>
#include <vector>

#include "hjnt/common.hpp"

namespace hjnt {

// Slot inventories must always carry a designated none-label and keyword-label.
// These are identified by name so that inventories stay configurable: "None"
// and "IntentKeyword" must be members.
struct SlotInventory {
  std::vector<std::string> labels;
  int none_index = -1;
  int keyword_index = -1;

  static SlotInventory standard() {
    SlotInventory inv;
    inv.labels = {"IntentKeyword", "Location", "PositionDirection", "Person",
                  "TimeGuidance",  "GestureGaze", "Object", "None"};
    inv.keyword_index = 0;
    inv.none_index = 7;
    return inv;
  }

  static SlotInventory from_labels(const std::vector<std::string>& names) {
    SlotInventory inv;
    inv.labels = names;
    for (int i = 0; i < int(names.size()); ++i) {
      if (names[size_t(i)] == "None") inv.none_index = i;
      if (names[size_t(i)] == "IntentKeyword") inv.keyword_index = i;
    }
    require(inv.none_index >= 0, ErrorCode::Validation, "slot inventory lacks the designated none-label \"None\"");
    require(inv.keyword_index >= 0, ErrorCode::Validation,
            "slot inventory lacks the designated keyword-label \"IntentKeyword\"");
    return inv;
  }

  int size() const { return int(labels.size()); }
  const std::string& name(int i) const { return labels[size_t(i)]; }

  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i) {
      if (labels[size_t(i)] == name) return i;
    }
    return -1;
  }

  bool operator==(const SlotInventory& o) const = default;
};

struct IntentInventory {
  std::vector<std::string> labels;
  int fallback_index = -1;

  static IntentInventory standard() {
    IntentInventory inv;
    inv.labels = {"SetDestination", "SetRoute", "Park",     "PullOver", "Stop",
                  "GoFaster",       "GoSlower", "OpenDoor", "Other"};
    inv.fallback_index = 8;
    return inv;
  }

  static IntentInventory from_labels(const std::vector<std::string>& names) {
    IntentInventory inv;
    inv.labels = names;
    require(!names.empty(), ErrorCode::Validation, "intent inventory must be nonempty");
    for (int i = 0; i < int(names.size()); ++i) {
      if (names[size_t(i)] == "Other") inv.fallback_index = i;
    }
    require(inv.fallback_index >= 0, ErrorCode::Validation,
            "intent inventory lacks the fallback label \"Other\"");
    return inv;
  }

  int size() const { return int(labels.size()); }
  const std::string& name(int i) const { return labels[size_t(i)]; }

  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i) {
      if (labels[size_t(i)] == name) return i;
    }
    return -1;
  }

  bool operator==(const IntentInventory& o) const = default;
};

enum class Modality { Audio, VideoCabin, VideoRoad };

inline const char* to_string(Modality m) {
  switch (m) {
    case Modality::Audio: return "audio";
    case Modality::VideoCabin: return "video_cabin";
    case Modality::VideoRoad: return "video_road";
  }
  return "unknown";
}

inline Modality modality_from_string(const std::string& s) {
  if (s == "audio") return Modality::Audio;
  if (s == "video_cabin") return Modality::VideoCabin;
  if (s == "video_road") return Modality::VideoRoad;
  fail(ErrorCode::Parse, "unknown modality \"", s, "\"");
}

constexpr Modality kAllModalities[] = {Modality::Audio, Modality::VideoCabin, Modality::VideoRoad};

}  // namespace hjnt
