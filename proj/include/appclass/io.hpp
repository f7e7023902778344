#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace appclass::io {

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Uniform draw in [0, bound) by rejection sampling. Unlike
/// std::uniform_int_distribution the sequence is identical across standard
/// libraries, which keeps seeded splits and shuffles portable.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Formats with "." decimal regardless of the global locale.
std::string format_fixed(double value, int decimals);

}  // namespace appclass::io
