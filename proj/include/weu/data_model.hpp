#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "weu/errors.hpp"

namespace weu {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

inline constexpr int kDefaultRMax = 5;

struct InteractionRecord {
  UserIndex user = 0;
  ItemIndex item = 0;
  int rating = 1;
  std::int64_t timestamp = 0;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

// Bidirectional raw string id <-> dense index table. Indices are assigned in
// order of first interning.
class IdMap {
 public:
  std::uint32_t intern(std::string_view raw) {
    auto it = index_.find(std::string(raw));
    if (it != index_.end()) return it->second;
    auto idx = static_cast<std::uint32_t>(raw_.size());
    raw_.emplace_back(raw);
    index_.emplace(raw_.back(), idx);
    return idx;
  }

  std::optional<std::uint32_t> find(std::string_view raw) const {
    auto it = index_.find(std::string(raw));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& raw(std::uint32_t idx) const { return raw_.at(idx); }
  std::size_t size() const noexcept { return raw_.size(); }
  const std::vector<std::string>& raw_ids() const noexcept { return raw_; }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct SplitDataset {
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> validation;
  std::vector<InteractionRecord> test;
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  int r_max = kDefaultRMax;
  IdMap users;
  IdMap items;

  std::size_t interaction_count() const noexcept {
    return train.size() + validation.size() + test.size();
  }
};

enum class Split { train, validation, test };

inline const std::vector<InteractionRecord>& records(const SplitDataset& d, Split s) {
  switch (s) {
    case Split::train: return d.train;
    case Split::validation: return d.validation;
    case Split::test: return d.test;
  }
  return d.test;
}

// Per-item counts over rating levels 1..r_max.
class RatingHistogram {
 public:
  explicit RatingHistogram(int r_max = kDefaultRMax)
      : counts_(static_cast<std::size_t>(r_max), 0) {
    if (r_max < 1) throw ConfigError("r_max must be >= 1");
  }

  static RatingHistogram from_counts(std::span<const std::uint64_t> counts) {
    RatingHistogram h(static_cast<int>(counts.size()));
    for (std::size_t r = 0; r < counts.size(); ++r) {
      h.counts_[r] = counts[r];
      h.total_ += counts[r];
    }
    return h;
  }

  void add(int rating, std::uint64_t n = 1) {
    check_level(rating);
    counts_[static_cast<std::size_t>(rating - 1)] += n;
    total_ += n;
  }

  int r_max() const noexcept { return static_cast<int>(counts_.size()); }
  std::uint64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }
  std::uint64_t count(int rating) const {
    check_level(rating);
    return counts_[static_cast<std::size_t>(rating - 1)];
  }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  double probability(int rating) const {
    check_level(rating);
    if (total_ == 0) throw EmptyHistogramError();
    return static_cast<double>(counts_[static_cast<std::size_t>(rating - 1)]) /
           static_cast<double>(total_);
  }

 private:
  void check_level(int rating) const {
    if (rating < 1 || rating > r_max())
      throw ConfigError("rating level " + std::to_string(rating) + " outside [1, " +
                        std::to_string(r_max()) + "]");
  }

  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline double probability(const RatingHistogram& hist, int rating) {
  return hist.probability(rating);
}

}  // namespace weu
