#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace appclass {

enum class ChannelId { text, ocr, caption, detection, embedding };

inline constexpr std::array<ChannelId, 5> kAllChannels = {
    ChannelId::text, ChannelId::ocr, ChannelId::caption, ChannelId::detection,
    ChannelId::embedding};

constexpr std::string_view to_string(ChannelId id) {
  switch (id) {
    case ChannelId::text: return "text";
    case ChannelId::ocr: return "ocr";
    case ChannelId::caption: return "caption";
    case ChannelId::detection: return "detection";
    case ChannelId::embedding: return "embedding";
  }
  return "unknown";
}

inline std::optional<ChannelId> parse_channel(std::string_view name) {
  for (auto id : kAllChannels)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

constexpr bool is_image_channel(ChannelId id) { return id != ChannelId::text; }

}  // namespace appclass
