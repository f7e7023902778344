#include "appclass/ensemble.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace appclass::ensemble {

VoteSlate::VoteSlate(std::vector<ChannelPrediction> predictions)
    : predictions_(std::move(predictions)) {
  if (predictions_.empty()) throw std::invalid_argument("vote slate is empty");
  for (std::size_t i = 0; i < predictions_.size(); ++i)
    for (std::size_t j = i + 1; j < predictions_.size(); ++j)
      if (predictions_[i].channel == predictions_[j].channel)
        throw std::invalid_argument("vote slate repeats channel " +
                                    std::string(to_string(predictions_[i].channel)));
}

bool VoteSlate::has(ChannelId channel) const {
  return std::any_of(predictions_.begin(), predictions_.end(),
                     [&](const auto& p) { return p.channel == channel; });
}

std::optional<VoteSlate> VoteSlate::without_text() const {
  std::vector<ChannelPrediction> rest;
  for (const auto& p : predictions_)
    if (p.channel != ChannelId::text) rest.push_back(p);
  if (rest.empty()) return std::nullopt;
  return VoteSlate(std::move(rest));
}

VoteOutcome vote(const VoteSlate& slate, std::span<const std::string> categories) {
  if (categories.empty()) throw std::invalid_argument("no categories configured");
  std::map<std::string, std::size_t> counts;
  const std::string* text_vote = nullptr;
  for (const auto& p : slate.predictions()) {
    if (!p.prediction) continue;
    if (std::find(categories.begin(), categories.end(), *p.prediction) == categories.end())
      throw std::invalid_argument("vote for unconfigured category " + *p.prediction);
    ++counts[*p.prediction];
    if (p.channel == ChannelId::text) text_vote = &*p.prediction;
  }
  if (counts.empty())
    return {*std::min_element(categories.begin(), categories.end()), true};

  std::size_t top = 0;
  for (const auto& [category, n] : counts) top = std::max(top, n);
  if (text_vote && counts[*text_vote] == top) return {*text_vote, false};
  // First in map order is the smallest category with the top count.
  for (const auto& [category, n] : counts)
    if (n == top) return {category, false};
  throw std::logic_error("unreachable");
}

VoteOutcome vote_image_only(const VoteSlate& slate, std::span<const std::string> categories) {
  if (slate.has(ChannelId::text)) throw std::invalid_argument("image-only slate contains the text channel");
  return vote(slate, categories);
}

}  // namespace appclass::ensemble
