#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

namespace bell {

enum class Outcome : std::uint8_t { zero = 0, plus = 1 };

inline char outcome_char(Outcome o) { return o == Outcome::plus ? '+' : '0'; }

/// Index into a per-setting-pair outcome array.
enum OutcomePairIndex : int { kPP = 0, kP0 = 1, kOP = 2, kOO = 3 };

inline int outcome_pair_index(Outcome a, Outcome b) {
  if (a == Outcome::plus) return b == Outcome::plus ? kPP : kP0;
  return b == Outcome::plus ? kOP : kOO;
}

/// One trial. Settings are 1 or 2; detect times are ns offsets within the
/// trial slot and are present exactly when the outcome is "+".
struct TrialRecord {
  std::uint64_t index = 0;
  std::uint8_t setting_a = 1;
  std::uint8_t setting_b = 1;
  Outcome outcome_a = Outcome::zero;
  Outcome outcome_b = Outcome::zero;
  std::optional<std::uint32_t> time_a;
  std::optional<std::uint32_t> time_b;

  bool operator==(const TrialRecord&) const = default;
};

/// Counts N(ab | a_i b_j) for every setting pair and outcome pair.
class CountTable {
 public:
  void add(const TrialRecord& rec) {
    ++n_[rec.setting_a - 1][rec.setting_b - 1][outcome_pair_index(rec.outcome_a, rec.outcome_b)];
  }
  void add(int i, int j, int pair, std::uint64_t count = 1) { n_[i][j][pair] += count; }

  /// Commutative, associative merge.
  void merge(const CountTable& other);

  std::uint64_t count(int i, int j, int pair) const { return n_[i][j][pair]; }
  std::uint64_t trials(int i, int j) const;
  std::uint64_t total() const;

  bool operator==(const CountTable&) const = default;

  nlohmann::json to_json() const;

 private:
  std::array<std::array<std::array<std::uint64_t, 4>, 2>, 2> n_{};
};

enum class RecordFormat { binary, text };

/// Record stream writer.
///
/// Binary layout (little-endian): the 8-byte magic "BELLREC1", a u32 length,
/// that many bytes of JSON run metadata, then 17-byte records:
/// u64 index, u8 flags (bit0 setting_a == 2, bit1 setting_b == 2,
/// bit2 outcome_a == '+', bit3 outcome_b == '+'), u32 time_a, u32 time_b,
/// with 0xFFFFFFFF marking an absent time.
///
/// Text layout: a "#BELLREC1 text" line, a "#meta <json>" line, then one
/// "index sa sb oa ob ta tb" line per record with '-' for absent times.
class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& path, RecordFormat format, const nlohmann::json& metadata);
  ~RecordWriter();
  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void write(const TrialRecord& rec);
  void close();

 private:
  std::ofstream out_;
  RecordFormat format_;
  std::uint64_t last_index_ = 0;
  bool any_ = false;
};

class RecordReader {
 public:
  explicit RecordReader(const std::filesystem::path& path);

  const nlohmann::json& metadata() const { return meta_; }
  RecordFormat format() const { return format_; }

  /// Next record, or empty at end of stream. Throws FormatError on a
  /// truncated or malformed record, or when indices are not increasing.
  std::optional<TrialRecord> next();

 private:
  std::ifstream in_;
  RecordFormat format_ = RecordFormat::binary;
  nlohmann::json meta_;
  std::uint64_t last_index_ = 0;
  bool any_ = false;
};

/// Aggregates every record in a stream file.
CountTable count_records(const std::filesystem::path& path);

inline constexpr std::uint32_t kNoTime = 0xFFFFFFFFu;
inline constexpr std::size_t kBinaryRecordSize = 17;

}  // namespace bell

namespace bell {

/// Role of a trial in the CH-Eberhard count statistic: a win is "++" at
/// a1b1; a loss is "+0" at a1b2, "0+" at a2b1 or "++" at a2b2.
enum class TrialEvent { none, win, loss };

inline TrialEvent classify_event(std::uint8_t setting_a, std::uint8_t setting_b, Outcome a, Outcome b) {
  const int pair = outcome_pair_index(a, b);
  const int sp = (setting_a - 1) * 2 + (setting_b - 1);
  if (sp == 0 && pair == kPP) return TrialEvent::win;
  if ((sp == 1 && pair == kP0) || (sp == 2 && pair == kOP) || (sp == 3 && pair == kPP)) return TrialEvent::loss;
  return TrialEvent::none;
}

inline TrialEvent classify_event(const TrialRecord& r) {
  return classify_event(r.setting_a, r.setting_b, r.outcome_a, r.outcome_b);
}

}  // namespace bell
