#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bellbench/config.hpp"
#include "bellbench/error.hpp"
#include "bellbench/records.hpp"

using namespace bell;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bellbench_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<TrialRecord> sample() {
  std::vector<TrialRecord> v;
  for (std::uint64_t i = 0; i < 50; ++i) {
    TrialRecord r;
    r.index = i * 3;
    r.setting_a = 1 + i % 2;
    r.setting_b = 1 + (i / 2) % 2;
    if (i % 5 == 0) {
      r.outcome_a = Outcome::plus;
      r.time_a = 200 + i;
    }
    if (i % 7 == 0) {
      r.outcome_b = Outcome::plus;
      r.time_b = 250 + i;
    }
    v.push_back(r);
  }
  return v;
}

}  // namespace

TEST_CASE("record files round trip in both formats") {
  for (auto fmt : {RecordFormat::binary, RecordFormat::text}) {
    const auto path = tmp(fmt == RecordFormat::binary ? "rt.bin" : "rt.txt");
    const auto recs = sample();
    {
      RecordWriter w(path, fmt, {{"seed", 5}});
      for (const auto& r : recs) w.write(r);
    }
    RecordReader rd(path);
    CHECK(rd.format() == fmt);
    CHECK(rd.metadata()["seed"] == 5);
    std::vector<TrialRecord> back;
    while (auto r = rd.next()) back.push_back(*r);
    CHECK(back == recs);
    CHECK(count_records(path) == [&] {
      CountTable c;
      for (const auto& r : recs) c.add(r);
      return c;
    }());
  }
}

TEST_CASE("binary records have fixed size") {
  const auto path = tmp("size.bin");
  std::uint64_t header = 0;
  {
    RecordWriter w(path, RecordFormat::binary, nlohmann::json::object());
    w.close();
    header = fs::file_size(path);
  }
  {
    RecordWriter w(path, RecordFormat::binary, nlohmann::json::object());
    for (const auto& r : sample()) w.write(r);
  }
  CHECK(fs::file_size(path) == header + 50 * kBinaryRecordSize);
}

TEST_CASE("writer rejects out-of-order indices and bad records") {
  RecordWriter w(tmp("order.bin"), RecordFormat::binary, nlohmann::json::object());
  TrialRecord r;
  r.index = 5;
  w.write(r);
  CHECK_THROWS_AS(w.write(r), InvalidParameter);
  r.index = 6;
  r.setting_a = 3;
  CHECK_THROWS_AS(w.write(r), InvalidParameter);
}

TEST_CASE("reader rejects damaged files") {
  const auto path = tmp("trunc.bin");
  {
    RecordWriter w(path, RecordFormat::binary, nlohmann::json::object());
    for (const auto& r : sample()) w.write(r);
  }
  fs::resize_file(path, fs::file_size(path) - 3);
  RecordReader rd(path);
  auto drain = [&] {
    while (rd.next()) {
    }
  };
  CHECK_THROWS_AS(drain(), FormatError);

  const auto junk = tmp("junk.bin");
  std::ofstream(junk) << "not a record file";
  CHECK_THROWS_AS(RecordReader{junk}, FormatError);

  const auto txt = tmp("bad.txt");
  std::ofstream(txt) << "#BELLREC1 text\n#meta {}\n0 1 1 0 0 12 -\n";  // time without a click
  RecordReader tr(txt);
  CHECK_THROWS_AS(tr.next(), FormatError);
}

TEST_CASE("count table merge and event classes") {
  CountTable a, b;
  a.add(0, 0, kPP, 3);
  b.add(1, 1, kOO, 4);
  b.add(0, 0, kPP, 1);
  CountTable ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  CHECK(ab == ba);
  CHECK(ab.count(0, 0, kPP) == 4);
  CHECK(ab.total() == 8);
  CHECK(ab.trials(1, 1) == 4);

  CHECK(classify_event(1, 1, Outcome::plus, Outcome::plus) == TrialEvent::win);
  CHECK(classify_event(1, 2, Outcome::plus, Outcome::zero) == TrialEvent::loss);
  CHECK(classify_event(2, 1, Outcome::zero, Outcome::plus) == TrialEvent::loss);
  CHECK(classify_event(2, 2, Outcome::plus, Outcome::plus) == TrialEvent::loss);
  CHECK(classify_event(1, 2, Outcome::plus, Outcome::plus) == TrialEvent::none);
  CHECK(classify_event(1, 1, Outcome::plus, Outcome::zero) == TrialEvent::none);
}

TEST_CASE("configuration parsing") {
  const auto c = Config::parse("# comment\n  a = 1.5  \nb=hello # note\na = 2\n\nx.y.z = -3e-2\n");
  CHECK(c.get_double("a") == 2.0);
  CHECK(c.get_string("b", "") == "hello");
  CHECK(c.get_double("x.y.z") == -3e-2);
  CHECK(c.get_double("missing", 7.0) == 7.0);
  CHECK(c.get_int("missing", 4) == 4);
  CHECK_THROWS(c.get_double("missing"));
  CHECK_THROWS_AS(c.get_double("b"), FormatError);
  CHECK(c.keys_with_prefix("x.") == std::vector<std::string>{"x.y.z"});
  CHECK(c.content_hash().size() == 16);
  CHECK(c.content_hash() != Config::parse("a = 1\n").content_hash());
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK_THROWS_AS(Config::parse("novalue\n"), FormatError);
}
