#include "oracles.hpp"

#include <algorithm>
#include <set>

namespace oracle {

std::vector<double> chi_square(const std::vector<std::vector<std::size_t>>& docs,
                               const std::vector<std::size_t>& labels, std::size_t n_terms,
                               std::size_t n_categories) {
  const double n = static_cast<double>(docs.size());
  std::vector<double> out(n_terms, 0.0);
  for (std::size_t t = 0; t < n_terms; ++t) {
    for (std::size_t c = 0; c < n_categories; ++c) {
      // observed[present][in_class]
      double observed[2][2] = {{0, 0}, {0, 0}};
      for (std::size_t d = 0; d < docs.size(); ++d) {
        const bool present = std::find(docs[d].begin(), docs[d].end(), t) != docs[d].end();
        const bool in_class = labels[d] == c;
        observed[present ? 1 : 0][in_class ? 1 : 0] += 1.0;
      }
      const double row[2] = {observed[0][0] + observed[0][1], observed[1][0] + observed[1][1]};
      const double col[2] = {observed[0][0] + observed[1][0], observed[0][1] + observed[1][1]};
      if (row[0] == 0 || row[1] == 0 || col[0] == 0 || col[1] == 0) continue;
      double chi = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double expected = row[i] * col[j] / n;
          chi += (observed[i][j] - expected) * (observed[i][j] - expected) / expected;
        }
      out[t] = std::max(out[t], chi);
    }
  }
  return out;
}

std::optional<VoteResult> ensemble_vote(const std::array<Slot, 4>& slots) {
  if (std::all_of(slots.begin(), slots.end(), [](Slot s) { return s == Slot::absent; }))
    return std::nullopt;
  std::array<int, 3> votes{0, 0, 0};
  int cast = 0;
  for (Slot s : slots) {
    const int v = static_cast<int>(s);
    if (v < 3) {
      ++votes[static_cast<std::size_t>(v)];
      ++cast;
    }
  }
  if (cast == 0) return VoteResult{0, true};
  const int top = *std::max_element(votes.begin(), votes.end());
  std::vector<std::size_t> tied;
  for (std::size_t c = 0; c < 3; ++c)
    if (votes[c] == top) tied.push_back(c);
  if (tied.size() == 1) return VoteResult{tied[0], false};
  const int text = static_cast<int>(slots[0]);
  if (text < 3 && votes[static_cast<std::size_t>(text)] == top)
    return VoteResult{static_cast<std::size_t>(text), false};
  return VoteResult{tied[0], false};
}

std::optional<std::size_t> detection_app_label(const std::vector<std::vector<Box>>& images,
                                               std::size_t n_categories) {
  std::vector<std::size_t> image_votes(n_categories, 0);
  std::vector<std::size_t> backing(n_categories, 0);
  bool any = false;
  for (const auto& boxes : images) {       // for each image
    std::vector<std::size_t> count(n_categories, 0);
    std::vector<std::vector<double>> confs(n_categories);
    for (const auto& box : boxes) {        // for each bounding box: fetch its label
      ++count[box.category];
      confs[box.category].push_back(box.confidence);
    }
    if (boxes.empty()) continue;
    // label the image with the label of the maximum bounding boxes
    std::size_t winner = n_categories;
    double winner_sum = 0.0;
    for (std::size_t c = 0; c < n_categories; ++c) {
      if (count[c] == 0) continue;
      double sum = 0.0;
      for (double v : confs[c]) sum += v;
      if (winner == n_categories || count[c] > count[winner] ||
          (count[c] == count[winner] && sum > winner_sum)) {
        winner = c;
        winner_sum = sum;
      }
    }
    ++image_votes[winner];
    backing[winner] += count[winner];
    any = true;
  }
  if (!any) return std::nullopt;
  // label the app with the label of max number of images
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_categories; ++c)
    if (image_votes[c] > image_votes[best] ||
        (image_votes[c] == image_votes[best] && backing[c] > backing[best]))
      best = c;
  return best;
}

std::vector<ClassCounts> recount(const std::vector<int>& gold, const std::vector<int>& predicted,
                                 std::size_t n_categories) {
  std::vector<ClassCounts> out(n_categories);
  for (std::size_t c = 0; c < n_categories; ++c) {
    const int k = static_cast<int>(c);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == k) ++out[c].support;
      if (gold[i] == k && predicted[i] == k) ++out[c].tp;
      if (gold[i] != k && predicted[i] == k) ++out[c].fp;
      if (gold[i] == k && predicted[i] != k) ++out[c].fn;
    }
  }
  return out;
}

}  // namespace oracle
