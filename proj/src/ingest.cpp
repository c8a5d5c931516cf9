#include "bellbench/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "bellbench/error.hpp"

namespace bell {
namespace {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

constexpr char kTraceMagic[4] = {'B', 'T', 'R', 'C'};
constexpr char kSettingsMagic[4] = {'B', 'S', 'E', 'T'};
constexpr std::uint32_t kTraceVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError(std::string("truncated ") + what);
  return v;
}

void expect_magic(std::istream& in, const char (&magic)[4], const std::filesystem::path& path) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic");
  }
}

// 0.5 (1 - cos(pi x)) on [0, 1]
double raised(double x) { return 0.5 * (1.0 - std::cos(std::numbers::pi * x)); }

}  // namespace

const char* to_string(Channel c) { return c == Channel::alice ? "alice" : "bob"; }

void PulseTrace::validate() const {
  if (!(calib_height > 0.0) || !std::isfinite(calib_height)) throw InvalidParameter("calib_height must be > 0");
  if (!(sample_period_ns > 0.0) || !std::isfinite(sample_period_ns)) {
    throw InvalidParameter("sample_period must be > 0");
  }
  if (!std::isfinite(t0_ns)) throw InvalidParameter("trace t0 is not finite");
  if (samples.size() < 2) throw InvalidParameter("trace needs at least 2 samples");
  for (float s : samples) {
    if (!std::isfinite(s)) throw InvalidParameter("trace has non-finite samples");
  }
}

void ThresholdRule::validate() const {
  if (!(timestamp > 0.0 && timestamp <= trigger && trigger <= accept)) {
    throw InvalidParameter("thresholds must satisfy 0 < timestamp <= trigger <= accept");
  }
}

std::optional<DetectionEvent> classify_trace(const PulseTrace& trace, Channel channel, const ThresholdRule& rule) {
  trace.validate();
  rule.validate();
  const auto& s = trace.samples;
  const double peak = *std::max_element(s.begin(), s.end());
  if (peak < rule.trigger * trace.calib_height) return std::nullopt;

  const double level = rule.timestamp * trace.calib_height;
  double t = trace.t0_ns;
  if (s[0] < level) {
    std::size_t k = 1;
    while (s[k] < level) ++k;  // terminates: peak >= trigger >= timestamp level
    const double lo = s[k - 1], hi = s[k];
    t = trace.t0_ns + trace.sample_period_ns * (static_cast<double>(k - 1) + (level - lo) / (hi - lo));
  }
  return DetectionEvent{t, channel, peak >= rule.accept * trace.calib_height};
}

std::vector<SlotHit> assign_slots(const std::vector<DetectionEvent>& events, double slot_period_ns,
                                  double offset_ns) {
  if (!(slot_period_ns > 0.0) || !std::isfinite(slot_period_ns)) throw InvalidParameter("slot period must be > 0");
  if (!std::isfinite(offset_ns)) throw InvalidParameter("offset must be finite");
  std::vector<SlotHit> hits;
  double last = -std::numeric_limits<double>::infinity();
  for (const DetectionEvent& e : events) {
    if (e.timestamp_ns < last) throw InvalidParameter("detection events are not time-sorted");
    last = e.timestamp_ns;
    if (!e.accepted) continue;
    const double rel = (e.timestamp_ns - offset_ns) / slot_period_ns;
    if (rel < 0.0) throw InvalidParameter("detection event before the first slot");
    const auto slot = static_cast<std::uint64_t>(std::floor(rel));
    if (hits.empty() || hits.back().slot != slot) hits.push_back({slot, e.timestamp_ns});
  }
  return hits;
}

IngestStats assemble_trials(const std::vector<std::uint8_t>& settings_a, const std::vector<std::uint8_t>& settings_b,
                            const std::vector<SlotHit>& hits_a, const std::vector<SlotHit>& hits_b,
                            double slot_period_ns, double offset_ns, const RecordSink& sink) {
  if (settings_a.size() != settings_b.size()) throw FormatError("settings files differ in length");
  IngestStats st;
  st.trials = settings_a.size();
  for (const auto* hits : {&hits_a, &hits_b}) {
    for (const SlotHit& h : *hits) {
      if (h.slot >= st.trials) ++st.hits_out_of_range;
    }
  }

  auto time_in_slot = [&](const SlotHit& h) {
    const double rel = h.timestamp_ns - (offset_ns + static_cast<double>(h.slot) * slot_period_ns);
    return static_cast<std::uint32_t>(std::clamp(std::llround(rel), 0LL, static_cast<long long>(kNoTime) - 1));
  };

  std::size_t ia = 0, ib = 0;
  for (std::uint64_t i = 0; i < st.trials; ++i) {
    TrialRecord rec;
    rec.index = i;
    rec.setting_a = settings_a[i];
    rec.setting_b = settings_b[i];
    if (ia < hits_a.size() && hits_a[ia].slot == i) {
      rec.outcome_a = Outcome::plus;
      rec.time_a = time_in_slot(hits_a[ia++]);
    }
    if (ib < hits_b.size() && hits_b[ib].slot == i) {
      rec.outcome_b = Outcome::plus;
      rec.time_b = time_in_slot(hits_b[ib++]);
    }
    if (sink) sink(rec);
  }
  return st;
}

// ---------------------------------------------------------------------------

TraceWriter::TraceWriter(const std::filesystem::path& path, double sample_period_ns, double calib_height,
                         std::uint32_t samples_per_trace)
    : out_(path, std::ios::binary | std::ios::trunc), samples_per_trace_(samples_per_trace) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_.write(kTraceMagic, 4);
  put(out_, kTraceVersion);
  put(out_, sample_period_ns);
  put(out_, calib_height);
  put(out_, samples_per_trace);
  put(out_, std::uint64_t{0});
}

TraceWriter::~TraceWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TraceWriter::write(double t0_ns, const std::vector<float>& samples) {
  if (samples.size() != samples_per_trace_) throw InvalidParameter("trace length does not match file header");
  put(out_, t0_ns);
  out_.write(reinterpret_cast<const char*>(samples.data()),
             static_cast<std::streamsize>(samples.size() * sizeof(float)));
  ++count_;
}

void TraceWriter::close() {
  if (!out_.is_open()) return;
  out_.seekp(4 + 4 + 8 + 8 + 4);
  put(out_, count_);
  out_.close();
  if (out_.fail()) throw std::runtime_error("failed writing trace file");
}

TraceReader::TraceReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw std::runtime_error("cannot open " + path.string());
  expect_magic(in_, kTraceMagic, path);
  if (get<std::uint32_t>(in_, "trace header") != kTraceVersion) throw FormatError("unsupported trace file version");
  period_ = get<double>(in_, "trace header");
  calib_ = get<double>(in_, "trace header");
  samples_ = get<std::uint32_t>(in_, "trace header");
  count_ = get<std::uint64_t>(in_, "trace header");
  if (!(period_ > 0.0) || !(calib_ > 0.0) || samples_ < 2) throw FormatError("invalid trace file header");
}

std::optional<PulseTrace> TraceReader::next() {
  if (read_ == count_) return std::nullopt;
  PulseTrace t;
  t.sample_period_ns = period_;
  t.calib_height = calib_;
  t.t0_ns = get<double>(in_, "trace");
  t.samples.resize(samples_);
  if (!in_.read(reinterpret_cast<char*>(t.samples.data()), static_cast<std::streamsize>(samples_ * sizeof(float)))) {
    throw FormatError("truncated trace");
  }
  ++read_;
  return t;
}

void write_settings(const std::filesystem::path& path, const std::vector<std::uint8_t>& settings) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kSettingsMagic, 4);
  put(out, static_cast<std::uint64_t>(settings.size()));
  out.write(reinterpret_cast<const char*>(settings.data()), static_cast<std::streamsize>(settings.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_settings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  expect_magic(in, kSettingsMagic, path);
  const auto n = get<std::uint64_t>(in, "settings header");
  std::vector<std::uint8_t> s(n);
  if (!in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(n))) {
    throw FormatError("truncated settings file");
  }
  for (std::uint8_t v : s) {
    if (v != 1 && v != 2) throw FormatError("setting value must be 1 or 2");
  }
  return s;
}

// ---------------------------------------------------------------------------

void TraceSynthesis::validate() const {
  if (!(sample_period_ns > 0.0) || !(calib_height > 0.0) || !(rise_ns > 0.0) || !(fall_ns > 0.0) ||
      !(pretrigger_ns >= 0.0)) {
    throw InvalidParameter("trace synthesis: periods, heights and widths must be positive");
  }
  if (samples_per_trace < 2) throw InvalidParameter("trace synthesis: need at least 2 samples");
  if (static_cast<double>(samples_per_trace - 1) * sample_period_ns < pretrigger_ns + rise_ns) {
    throw InvalidParameter("trace synthesis: trace too short to contain the pulse rise");
  }
  if (!(height_jitter >= 0.0) || !(noise >= 0.0)) throw InvalidParameter("trace synthesis: negative jitter or noise");
  if (!(blackbody_prob >= 0.0 && blackbody_prob <= 1.0)) throw InvalidParameter("blackbody_prob must be in [0, 1]");
  if (!(blackbody_height > timestamp_level)) throw InvalidParameter("blackbody_height must exceed timestamp level");
}

TraceSynthesis TraceSynthesis::from_config(const Config& cfg) {
  TraceSynthesis s;
  s.sample_period_ns = cfg.get_double("trace.sample_period_ns", s.sample_period_ns);
  s.samples_per_trace = static_cast<std::uint32_t>(cfg.get_int("trace.samples", s.samples_per_trace));
  s.calib_height = cfg.get_double("trace.calib_height", s.calib_height);
  s.pretrigger_ns = cfg.get_double("trace.pretrigger_ns", s.pretrigger_ns);
  s.rise_ns = cfg.get_double("trace.rise_ns", s.rise_ns);
  s.fall_ns = cfg.get_double("trace.fall_ns", s.fall_ns);
  s.height_jitter = cfg.get_double("trace.height_jitter", s.height_jitter);
  s.noise = cfg.get_double("trace.noise", s.noise);
  s.blackbody_prob = cfg.get_double("trace.blackbody_prob", s.blackbody_prob);
  s.blackbody_height = cfg.get_double("trace.blackbody_height", s.blackbody_height);
  s.timestamp_level = cfg.get_double("ingest.timestamp_level", s.timestamp_level);
  s.validate();
  return s;
}

PulseTrace TraceSynthesis::make_trace(double detect_ns, double height, CounterRng& gen) const {
  PulseTrace t;
  t.sample_period_ns = sample_period_ns;
  t.calib_height = calib_height;
  // Phase of the rise at which the pulse crosses the timestamp level.
  const double frac = timestamp_level / height;
  const double cross = rise_ns / std::numbers::pi * std::acos(1.0 - 2.0 * frac);
  const double pulse_start = detect_ns - cross;
  t.t0_ns = pulse_start - pretrigger_ns;
  t.samples.resize(samples_per_trace);
  for (std::uint32_t k = 0; k < samples_per_trace; ++k) {
    const double u = static_cast<double>(k) * sample_period_ns - pretrigger_ns;
    double v = 0.0;
    if (u > 0.0 && u < rise_ns) v = raised(u / rise_ns);
    else if (u >= rise_ns && u < rise_ns + fall_ns) v = 1.0 - raised((u - rise_ns) / fall_ns);
    v *= height * calib_height;
    if (noise > 0.0) v += noise * calib_height * gen.normal();
    t.samples[k] = static_cast<float>(v);
  }
  return t;
}

IngestOptions IngestOptions::from_config(const Config& cfg) {
  IngestOptions o;
  o.rule.trigger = cfg.get_double("ingest.trigger_level", o.rule.trigger);
  o.rule.accept = cfg.get_double("ingest.accept_level", o.rule.accept);
  o.rule.timestamp = cfg.get_double("ingest.timestamp_level", o.rule.timestamp);
  o.slot_period_ns = cfg.get_double("ingest.slot_period_ns", cfg.get_double("timing.slot_period_ns", o.slot_period_ns));
  o.offset_ns = cfg.get_double("ingest.offset_ns", o.offset_ns);
  o.rule.validate();
  if (!(o.slot_period_ns > 0.0)) throw InvalidParameter("ingest.slot_period_ns must be > 0");
  return o;
}

RawRunWriter::RawRunWriter(const std::filesystem::path& dir, const TraceSynthesis& synth, const IngestOptions& slots,
                           const TrialTiming& timing, std::uint64_t seed)
    : dir_((std::filesystem::create_directories(dir), dir)),
      synth_(synth),
      slots_(slots),
      timing_(timing),
      seed_(seed),
      alice_(dir / "alice.traces", synth.sample_period_ns, synth.calib_height, synth.samples_per_trace),
      bob_(dir / "bob.traces", synth.sample_period_ns, synth.calib_height, synth.samples_per_trace) {
  synth_.validate();
  if (slots_.slot_period_ns != timing_.slot_period_ns) {
    throw InvalidParameter("ingest slot period differs from simulated slot period");
  }
}

void RawRunWriter::emit(Channel ch, const TrialRecord& rec, std::optional<std::uint32_t> time) {
  CounterRng gen(seed_, 2 * rec.index + (ch == Channel::bob ? 1 : 0), RngStream::trace);
  const double slot_start = slots_.offset_ns + static_cast<double>(rec.index) * slots_.slot_period_ns;

  struct Pulse {
    double t;
    double h;
  };
  Pulse pulses[2];
  int n = 0;
  if (time) {
    const double h = std::clamp(1.0 + synth_.height_jitter * gen.normal(), 0.8, 1.2);
    pulses[n++] = {slot_start + *time, h};
  }
  if (synth_.blackbody_prob > 0.0 && gen.bernoulli(synth_.blackbody_prob)) {
    const double t = timing_.window_start_ns + gen.uniform() * (timing_.window_end_ns - timing_.window_start_ns);
    pulses[n++] = {slot_start + t, synth_.blackbody_height};
  }
  if (n == 2 && pulses[1].t < pulses[0].t) std::swap(pulses[0], pulses[1]);
  TraceWriter& w = ch == Channel::alice ? alice_ : bob_;
  for (int i = 0; i < n; ++i) {
    const PulseTrace tr = synth_.make_trace(pulses[i].t, pulses[i].h, gen);
    w.write(tr.t0_ns, tr.samples);
  }
}

void RawRunWriter::write(const TrialRecord& rec) {
  if (rec.index != settings_a_.size()) throw InvalidParameter("raw run records must have consecutive indices from 0");
  settings_a_.push_back(rec.setting_a);
  settings_b_.push_back(rec.setting_b);
  emit(Channel::alice, rec, rec.outcome_a == Outcome::plus ? std::optional(rec.time_a.value_or(0)) : std::nullopt);
  emit(Channel::bob, rec, rec.outcome_b == Outcome::plus ? std::optional(rec.time_b.value_or(0)) : std::nullopt);
}

void RawRunWriter::close() {
  if (closed_) return;
  closed_ = true;
  alice_.close();
  bob_.close();
  write_settings(dir_ / "alice.settings", settings_a_);
  write_settings(dir_ / "bob.settings", settings_b_);
}

IngestStats ingest_directory(const std::filesystem::path& dir, const IngestOptions& opts, const RecordSink& sink) {
  auto read_channel = [&](const char* name, Channel ch, std::uint64_t& n_traces, IngestStats& st) {
    TraceReader reader(dir / (std::string(name) + ".traces"));
    std::vector<DetectionEvent> events;
    while (auto tr = reader.next()) {
      ++n_traces;
      if (auto ev = classify_trace(*tr, ch, opts.rule)) {
        ++st.triggered;
        if (ev->accepted) ++st.accepted;
        events.push_back(*ev);
      }
    }
    return assign_slots(events, opts.slot_period_ns, opts.offset_ns);
  };

  IngestStats counted;
  const auto hits_a = read_channel("alice", Channel::alice, counted.traces_a, counted);
  const auto hits_b = read_channel("bob", Channel::bob, counted.traces_b, counted);
  IngestStats st = assemble_trials(read_settings(dir / "alice.settings"), read_settings(dir / "bob.settings"), hits_a,
                                   hits_b, opts.slot_period_ns, opts.offset_ns, sink);
  st.traces_a = counted.traces_a;
  st.traces_b = counted.traces_b;
  st.triggered = counted.triggered;
  st.accepted = counted.accepted;
  return st;
}

}  // namespace bell
