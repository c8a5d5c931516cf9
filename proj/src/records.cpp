#include "bellbench/records.hpp"

#include <charconv>
#include <sstream>

#include "bellbench/error.hpp"

namespace bell {
namespace {

constexpr char kMagic[8] = {'B', 'E', 'L', 'L', 'R', 'E', 'C', '1'};
const std::string kTextMagic = "#BELLREC1 text";

void put_le(char* dst, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) dst[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
}

std::uint64_t get_le(const char* src, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[k])) << (8 * k);
  return v;
}

}  // namespace

void CountTable::merge(const CountTable& other) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 4; ++k) n_[i][j][k] += other.n_[i][j][k];
}

std::uint64_t CountTable::trials(int i, int j) const {
  const auto& c = n_[i][j];
  return c[0] + c[1] + c[2] + c[3];
}

std::uint64_t CountTable::total() const {
  return trials(0, 0) + trials(0, 1) + trials(1, 0) + trials(1, 1);
}

nlohmann::json CountTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      const auto& c = n_[i][k];
      j["a" + std::to_string(i + 1) + "b" + std::to_string(k + 1)] = {
          {"++", c[kPP]}, {"+0", c[kP0]}, {"0+", c[kOP]}, {"00", c[kOO]}};
    }
  }
  return j;
}

RecordWriter::RecordWriter(const std::filesystem::path& path, RecordFormat format, const nlohmann::json& metadata)
    : out_(path, std::ios::binary | std::ios::trunc), format_(format) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string meta = metadata.dump();
  if (format_ == RecordFormat::binary) {
    out_.write(kMagic, sizeof kMagic);
    char len[4];
    put_le(len, meta.size(), 4);
    out_.write(len, 4);
    out_.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  } else {
    out_ << kTextMagic << "\n#meta " << meta << "\n";
  }
}

RecordWriter::~RecordWriter() {
  if (out_.is_open()) out_.close();
}

namespace {

// Empty if the record is well formed, else the reason.
const char* record_problem(const TrialRecord& r) {
  if ((r.setting_a != 1 && r.setting_a != 2) || (r.setting_b != 1 && r.setting_b != 2)) return "setting must be 1 or 2";
  if (r.time_a.has_value() != (r.outcome_a == Outcome::plus) || r.time_b.has_value() != (r.outcome_b == Outcome::plus)) {
    return "detect time must be present exactly for a '+' outcome";
  }
  if (r.time_a == kNoTime || r.time_b == kNoTime) return "detect time out of range";
  return nullptr;
}

std::uint32_t parse_time(const std::string& s, const std::string& line) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad detect time: " + line);
  return v;
}

}  // namespace

void RecordWriter::write(const TrialRecord& rec) {
  if (any_ && rec.index <= last_index_) throw InvalidParameter("record indices must be strictly increasing");
  if (const char* why = record_problem(rec)) throw InvalidParameter(why);
  any_ = true;
  last_index_ = rec.index;
  if (format_ == RecordFormat::binary) {
    char buf[kBinaryRecordSize];
    put_le(buf, rec.index, 8);
    std::uint8_t flags = 0;
    if (rec.setting_a == 2) flags |= 1;
    if (rec.setting_b == 2) flags |= 2;
    if (rec.outcome_a == Outcome::plus) flags |= 4;
    if (rec.outcome_b == Outcome::plus) flags |= 8;
    buf[8] = static_cast<char>(flags);
    put_le(buf + 9, rec.time_a.value_or(kNoTime), 4);
    put_le(buf + 13, rec.time_b.value_or(kNoTime), 4);
    out_.write(buf, sizeof buf);
  } else {
    out_ << rec.index << ' ' << int(rec.setting_a) << ' ' << int(rec.setting_b) << ' ' << outcome_char(rec.outcome_a)
         << ' ' << outcome_char(rec.outcome_b) << ' ';
    if (rec.time_a) out_ << *rec.time_a; else out_ << '-';
    out_ << ' ';
    if (rec.time_b) out_ << *rec.time_b; else out_ << '-';
    out_ << '\n';
  }
}

void RecordWriter::close() {
  out_.flush();
  if (!out_) throw FormatError("write failed");
  out_.close();
}

RecordReader::RecordReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw std::runtime_error("cannot open record file " + path.string());
  char magic[8] = {};
  in_.read(magic, 8);
  if (in_.gcount() == 8 && std::equal(magic, magic + 8, kMagic)) {
    format_ = RecordFormat::binary;
    char len[4];
    in_.read(len, 4);
    if (in_.gcount() != 4) throw FormatError("truncated record header");
    std::string meta(get_le(len, 4), '\0');
    in_.read(meta.data(), static_cast<std::streamsize>(meta.size()));
    if (static_cast<std::size_t>(in_.gcount()) != meta.size()) throw FormatError("truncated record metadata");
    meta_ = nlohmann::json::parse(meta);
    return;
  }
  in_.clear();
  in_.seekg(0);
  std::string line;
  std::getline(in_, line);
  if (line != kTextMagic) throw FormatError("not a record stream: " + path.string());
  format_ = RecordFormat::text;
  std::getline(in_, line);
  if (line.rfind("#meta ", 0) != 0) throw FormatError("missing #meta line");
  meta_ = nlohmann::json::parse(line.substr(6));
}

std::optional<TrialRecord> RecordReader::next() {
  TrialRecord rec;
  if (format_ == RecordFormat::binary) {
    char buf[kBinaryRecordSize];
    in_.read(buf, sizeof buf);
    const auto got = in_.gcount();
    if (got == 0) return std::nullopt;
    if (got != static_cast<std::streamsize>(sizeof buf)) throw FormatError("truncated binary record");
    rec.index = get_le(buf, 8);
    const auto flags = static_cast<std::uint8_t>(buf[8]);
    if (flags & 0xF0) throw FormatError("reserved record flag bits set");
    rec.setting_a = (flags & 1) ? 2 : 1;
    rec.setting_b = (flags & 2) ? 2 : 1;
    rec.outcome_a = (flags & 4) ? Outcome::plus : Outcome::zero;
    rec.outcome_b = (flags & 8) ? Outcome::plus : Outcome::zero;
    const auto ta = static_cast<std::uint32_t>(get_le(buf + 9, 4));
    const auto tb = static_cast<std::uint32_t>(get_le(buf + 13, 4));
    if (ta != kNoTime) rec.time_a = ta;
    if (tb != kNoTime) rec.time_b = tb;
  } else {
    std::string line;
    do {
      if (!std::getline(in_, line)) return std::nullopt;
    } while (line.empty() || line[0] == '#');
    std::istringstream ls(line);
    int sa = 0, sb = 0;
    char oa = 0, ob = 0;
    std::string ta, tb;
    if (!(ls >> rec.index >> sa >> sb >> oa >> ob >> ta >> tb)) throw FormatError("malformed text record: " + line);
    if ((sa != 1 && sa != 2) || (sb != 1 && sb != 2)) throw FormatError("setting must be 1 or 2: " + line);
    if ((oa != '+' && oa != '0') || (ob != '+' && ob != '0')) throw FormatError("outcome must be + or 0: " + line);
    rec.setting_a = static_cast<std::uint8_t>(sa);
    rec.setting_b = static_cast<std::uint8_t>(sb);
    rec.outcome_a = oa == '+' ? Outcome::plus : Outcome::zero;
    rec.outcome_b = ob == '+' ? Outcome::plus : Outcome::zero;
    if (ta != "-") rec.time_a = parse_time(ta, line);
    if (tb != "-") rec.time_b = parse_time(tb, line);
  }
  if (any_ && rec.index <= last_index_) throw FormatError("record indices must be strictly increasing");
  if (const char* why = record_problem(rec)) throw FormatError(why);
  any_ = true;
  last_index_ = rec.index;
  return rec;
}

CountTable count_records(const std::filesystem::path& path) {
  RecordReader reader(path);
  CountTable counts;
  while (auto rec = reader.next()) counts.add(*rec);
  return counts;
}

}  // namespace bell
