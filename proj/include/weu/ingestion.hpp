#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"

namespace weu {

struct IngestConfig {
  std::size_t min_interactions = 10;
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  int r_max = kDefaultRMax;

  void validate() const {
    if (min_interactions < 1) throw ConfigError("min_interactions must be >= 1");
    if (r_max < 1) throw ConfigError("r_max must be >= 1");
    double sum = 0.0;
    for (double r : split_ratios) {
      if (r < 0.0) throw ConfigError("split ratios must be non-negative");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  }
};

struct RawInteraction {
  std::string user;
  std::string item;
  int rating = 1;
  std::int64_t timestamp = 0;

  friend bool operator==(const RawInteraction&, const RawInteraction&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline bool is_integer(std::string_view s) {
  std::int64_t v = 0;
  return parse_int(s, v);
}

}  // namespace detail

// Reads `user_id,item_id,rating,timestamp` lines. The first line is treated as
// a header when neither its rating nor its timestamp field is an integer.
inline std::vector<RawInteraction> parse_interactions(std::istream& source,
                                                      const IngestConfig& config) {
  std::vector<RawInteraction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    auto view = detail::trim(line);
    if (view.empty()) continue;
    auto fields = detail::split_fields(view);
    if (lineno == 1 && fields.size() == 4 && !detail::is_integer(fields[2]) &&
        !detail::is_integer(fields[3]))
      continue;
    if (fields.size() != 4)
      throw ParseError(lineno, "expected 4 comma-separated fields, got " +
                                   std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(lineno, "empty user or item id");
    RawInteraction rec{std::string(fields[0]), std::string(fields[1]), 0, 0};
    if (!detail::parse_int(fields[2], rec.rating))
      throw ParseError(lineno, "rating is not an integer: '" + std::string(fields[2]) + "'");
    if (!detail::parse_int(fields[3], rec.timestamp))
      throw ParseError(lineno,
                       "timestamp is not an integer: '" + std::string(fields[3]) + "'");
    if (rec.rating < 1 || rec.rating > config.r_max)
      throw RatingRangeError(lineno, "rating " + std::to_string(rec.rating) +
                                         " outside [1, " + std::to_string(config.r_max) + "]");
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<RawInteraction> parse_interactions(std::string_view text,
                                                      const IngestConfig& config) {
  std::istringstream in{std::string(text)};
  return parse_interactions(in, config);
}

// Repeatedly drops every interaction of a user or item with fewer than
// min_interactions interactions until nothing changes. Works on any record
// type with hashable `user` and `item` members. Relative order is preserved.
template <class Record>
std::vector<Record> filter_k_core(std::vector<Record> records, std::size_t min_interactions) {
  using UserKey = std::decay_t<decltype(Record::user)>;
  using ItemKey = std::decay_t<decltype(Record::item)>;
  while (true) {
    std::unordered_map<UserKey, std::size_t> user_counts;
    std::unordered_map<ItemKey, std::size_t> item_counts;
    for (const auto& r : records) {
      ++user_counts[r.user];
      ++item_counts[r.item];
    }
    auto keep = [&](const Record& r) {
      return user_counts[r.user] >= min_interactions && item_counts[r.item] >= min_interactions;
    };
    auto before = records.size();
    std::erase_if(records, [&](const Record& r) { return !keep(r); });
    if (records.size() == before) return records;
  }
}

// Per-user chronological split. Ties on timestamp are ordered by item index.
// Train receives floor(r0*n), validation floor(r1*n), test the remainder.
inline SplitDataset chronological_split(const std::vector<InteractionRecord>& records,
                                        const std::array<double, 3>& ratios,
                                        std::size_t user_count, std::size_t item_count,
                                        int r_max = kDefaultRMax) {
  SplitDataset ds;
  ds.user_count = user_count;
  ds.item_count = item_count;
  ds.r_max = r_max;

  std::vector<std::vector<InteractionRecord>> by_user(user_count);
  for (const auto& r : records) {
    if (r.user >= user_count || r.item >= item_count)
      throw ConfigError("interaction index outside population");
    by_user[r.user].push_back(r);
  }
  for (auto& recs : by_user) {
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.item < b.item;
    });
    const double n = static_cast<double>(recs.size());
    auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * n + 1e-9));
    auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9));
    n_train = std::min(n_train, recs.size());
    n_val = std::min(n_val, recs.size() - n_train);
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (k < n_train)
        ds.train.push_back(recs[k]);
      else if (k < n_train + n_val)
        ds.validation.push_back(recs[k]);
      else
        ds.test.push_back(recs[k]);
    }
  }
  return ds;
}

// parse -> k-core filter -> dense reindex (first-appearance order) -> split.
inline SplitDataset build_dataset(const std::vector<RawInteraction>& raw,
                                  const IngestConfig& config) {
  config.validate();
  auto kept = filter_k_core(raw, config.min_interactions);
  IdMap users, items;
  std::vector<InteractionRecord> dense;
  dense.reserve(kept.size());
  for (const auto& r : kept)
    dense.push_back({users.intern(r.user), items.intern(r.item), r.rating, r.timestamp});
  auto ds = chronological_split(dense, config.split_ratios, users.size(), items.size(),
                                config.r_max);
  ds.users = std::move(users);
  ds.items = std::move(items);
  return ds;
}

// ---------------------------------------------------------------------------
// On-disk split directory.

inline constexpr std::string_view kInteractionHeader = "user_id,item_id,rating,timestamp";

inline void write_interactions(std::ostream& out, const std::vector<InteractionRecord>& recs) {
  out << kInteractionHeader << '\n';
  for (const auto& r : recs)
    out << r.user << ',' << r.item << ',' << r.rating << ',' << r.timestamp << '\n';
}

inline void write_id_map(std::ostream& out, const IdMap& map) {
  out << "raw_id,dense_index\n";
  for (std::size_t i = 0; i < map.size(); ++i)
    out << map.raw(static_cast<std::uint32_t>(i)) << ',' << i << '\n';
}

inline nlohmann::json dataset_stats(const SplitDataset& ds) {
  const auto n = ds.interaction_count();
  const double cells = static_cast<double>(ds.user_count) * static_cast<double>(ds.item_count);
  return {{"users", ds.user_count},
          {"items", ds.item_count},
          {"interactions", n},
          {"sparsity", cells > 0 ? static_cast<double>(n) / cells : 0.0},
          {"r_max", ds.r_max},
          {"train", ds.train.size()},
          {"validation", ds.validation.size()},
          {"test", ds.test.size()}};
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + p.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + p.string());
  return in;
}

}  // namespace detail

inline void write_split(const std::filesystem::path& dir, const SplitDataset& ds) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "train.csv");
    write_interactions(out, ds.train);
  }
  {
    auto out = detail::open_out(dir / "validation.csv");
    write_interactions(out, ds.validation);
  }
  {
    auto out = detail::open_out(dir / "test.csv");
    write_interactions(out, ds.test);
  }
  {
    auto out = detail::open_out(dir / "id_map_users.csv");
    write_id_map(out, ds.users);
  }
  {
    auto out = detail::open_out(dir / "id_map_items.csv");
    write_id_map(out, ds.items);
  }
  auto out = detail::open_out(dir / "dataset_stats.json");
  out << dataset_stats(ds).dump(2) << '\n';
}

namespace detail {

inline IdMap read_id_map(const std::filesystem::path& p) {
  auto in = open_in(p);
  IdMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (view.empty() || (lineno == 1 && view == "raw_id,dense_index")) continue;
    auto comma = view.rfind(',');
    std::size_t idx = 0;
    if (comma == std::string_view::npos || !parse_int(view.substr(comma + 1), idx))
      throw ParseError(lineno, p.filename().string() + ": malformed id map row");
    if (map.intern(view.substr(0, comma)) != idx)
      throw ParseError(lineno, p.filename().string() + ": dense indices must be 0..n-1 in order");
  }
  return map;
}

inline std::vector<InteractionRecord> read_dense(const std::filesystem::path& p, int r_max,
                                                 std::size_t users, std::size_t items) {
  auto in = open_in(p);
  IngestConfig cfg;
  cfg.r_max = r_max;
  std::vector<InteractionRecord> out;
  try {
    for (const auto& r : parse_interactions(in, cfg)) {
      InteractionRecord rec{0, 0, r.rating, r.timestamp};
      if (!parse_int(std::string_view(r.user), rec.user) ||
          !parse_int(std::string_view(r.item), rec.item) || rec.user >= users ||
          rec.item >= items)
        throw Error("dense index out of range (" + r.user + "," + r.item + ")");
      out.push_back(rec);
    }
  } catch (const Error& e) {
    throw Error(p.string() + ": " + e.what());
  }
  return out;
}

}  // namespace detail

inline SplitDataset read_split(const std::filesystem::path& dir) {
  SplitDataset ds;
  {
    auto in = detail::open_in(dir / "dataset_stats.json");
    auto stats = nlohmann::json::parse(in);
    ds.r_max = stats.at("r_max").get<int>();
  }
  ds.users = detail::read_id_map(dir / "id_map_users.csv");
  ds.items = detail::read_id_map(dir / "id_map_items.csv");
  ds.user_count = ds.users.size();
  ds.item_count = ds.items.size();
  ds.train = detail::read_dense(dir / "train.csv", ds.r_max, ds.user_count, ds.item_count);
  ds.validation =
      detail::read_dense(dir / "validation.csv", ds.r_max, ds.user_count, ds.item_count);
  ds.test = detail::read_dense(dir / "test.csv", ds.r_max, ds.user_count, ds.item_count);
  return ds;
}

}  // namespace weu
