#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ultraco::detail {

// Fixed-width bitset over the elements of one finite set.
class MemberSet {
public:
  MemberSet() = default;
  explicit MemberSet(std::size_t n) : words_((n + 63) / 64, 0) {}

  void insert(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  [[nodiscard]] bool contains(std::size_t i) const {
    return (words_[i / 64] >> (i % 64)) & 1U;
  }
  [[nodiscard]] bool subset_of(const MemberSet &o) const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & ~o.words_[w])
        return false;
    return true;
  }
  [[nodiscard]] bool empty() const {
    return std::all_of(words_.begin(), words_.end(),
                       [](std::uint64_t w) { return w == 0; });
  }
  MemberSet &operator&=(const MemberSet &o) {
    for (std::size_t w = 0; w < words_.size(); ++w)
      words_[w] &= o.words_[w];
    return *this;
  }
  [[nodiscard]] std::vector<std::size_t> to_vector(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
      if (contains(i))
        out.push_back(i);
    return out;
  }

  friend bool operator==(const MemberSet &, const MemberSet &) = default;
  friend auto operator<=>(const MemberSet &, const MemberSet &) = default;

private:
  std::vector<std::uint64_t> words_;
};

} // namespace ultraco::detail
