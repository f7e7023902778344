#pragma once

#include <span>
#include <string>
#include <vector>

#include "appclass/channels.hpp"

namespace appclass::ensemble {

using channels::ChannelPrediction;

/// Channel predictions for one app, at most one per channel, never empty.
class VoteSlate {
 public:
  /// Throws std::invalid_argument on an empty slate or a repeated channel.
  explicit VoteSlate(std::vector<ChannelPrediction> predictions);

  const std::vector<ChannelPrediction>& predictions() const { return predictions_; }
  bool has(ChannelId channel) const;

  /// The slate without the text channel; nullopt when nothing remains.
  std::optional<VoteSlate> without_text() const;

 private:
  std::vector<ChannelPrediction> predictions_;
};

struct VoteOutcome {
  std::string category;
  /// Every channel abstained; `category` is then the smallest category.
  bool undecided = false;

  bool operator==(const VoteOutcome&) const = default;
};

/// Plurality over non-abstaining channels. A top count shared by several
/// categories goes to the text channel's vote when that vote is one of the
/// tied categories, otherwise to the lexicographically smallest of them.
VoteOutcome vote(const VoteSlate& slate, std::span<const std::string> categories);

/// vote() for slates of image channels only. Throws std::invalid_argument if
/// the slate contains the text channel.
VoteOutcome vote_image_only(const VoteSlate& slate, std::span<const std::string> categories);

}  // namespace appclass::ensemble
