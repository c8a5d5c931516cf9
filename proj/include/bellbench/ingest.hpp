#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "bellbench/config.hpp"
#include "bellbench/records.hpp"
#include "bellbench/trial_sim.hpp"

namespace bell {

enum class Channel { alice, bob };

const char* to_string(Channel c);

/// One digitized detector pulse. t0_ns is the absolute time of samples[0].
struct PulseTrace {
  double t0_ns = 0.0;
  double sample_period_ns = 1.0;
  double calib_height = 1.0;
  std::vector<float> samples;

  void validate() const;
};

struct DetectionEvent {
  double timestamp_ns = 0.0;
  Channel channel = Channel::alice;
  bool accepted = false;
};

/// Levels as fractions of calib_height.
struct ThresholdRule {
  double trigger = 0.55;
  double accept = 0.75;
  double timestamp = 0.20;

  void validate() const;
};

/// Empty if the trace never reaches the trigger level. Otherwise the event
/// is accepted iff the peak reaches the acceptance level; the timestamp is
/// the first upward crossing of the timestamp level, linearly interpolated.
/// Throws InvalidParameter for fewer than 2 samples.
std::optional<DetectionEvent> classify_trace(const PulseTrace& trace, Channel channel,
                                             const ThresholdRule& rule = {});

/// First accepted detection in a time slot.
struct SlotHit {
  std::uint64_t slot = 0;
  double timestamp_ns = 0.0;
};

/// slot = floor((t - offset) / period) over accepted events; several events
/// in one slot give one hit carrying the earliest time. Events must be
/// sorted by time (InvalidParameter otherwise) and not precede the offset.
std::vector<SlotHit> assign_slots(const std::vector<DetectionEvent>& events, double slot_period_ns,
                                  double offset_ns);

struct IngestStats {
  std::uint64_t trials = 0;
  std::uint64_t traces_a = 0;
  std::uint64_t traces_b = 0;
  std::uint64_t triggered = 0;
  std::uint64_t accepted = 0;
  std::uint64_t hits_out_of_range = 0;
};

/// Builds one TrialRecord per setting pair. A side's outcome is "+" iff it
/// has a hit in that slot; the record time is the hit time relative to the
/// slot start, rounded to the nearest ns.
IngestStats assemble_trials(const std::vector<std::uint8_t>& settings_a, const std::vector<std::uint8_t>& settings_b,
                            const std::vector<SlotHit>& hits_a, const std::vector<SlotHit>& hits_b,
                            double slot_period_ns, double offset_ns, const RecordSink& sink);

// ---------------------------------------------------------------------------
// Files
//
// Trace file, little-endian:
//   "BTRC" | u32 version (1) | f64 sample_period_ns | f64 calib_height |
//   u32 samples_per_trace | u64 count | count x (f64 t0_ns | f32 samples[])
// Settings file:
//   "BSET" | u64 n | n x u8 (1 or 2)

class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, double sample_period_ns, double calib_height,
              std::uint32_t samples_per_trace);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(double t0_ns, const std::vector<float>& samples);
  void close();

 private:
  std::ofstream out_;
  std::uint32_t samples_per_trace_;
  std::uint64_t count_ = 0;
};

class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path);

  std::uint64_t count() const { return count_; }
  double sample_period_ns() const { return period_; }
  double calib_height() const { return calib_; }

  std::optional<PulseTrace> next();

 private:
  std::ifstream in_;
  double period_ = 0.0;
  double calib_ = 0.0;
  std::uint32_t samples_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

void write_settings(const std::filesystem::path& path, const std::vector<std::uint8_t>& settings);
std::vector<std::uint8_t> read_settings(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic raw data

/// Raised-cosine pulse: rise over rise_ns to the peak, fall over fall_ns.
/// Accepted photons get peak (1 + height_jitter * N(0,1)) * calib, clamped
/// to [0.8, 1.2]; background pulses get blackbody_height * calib and occur
/// with probability blackbody_prob per trial and side, uniformly within the
/// slot's detection window. Additive sample noise is Gaussian with sd
/// noise * calib.
struct TraceSynthesis {
  double sample_period_ns = 2.0;
  std::uint32_t samples_per_trace = 256;
  double calib_height = 1.0;
  double pretrigger_ns = 20.0;
  double rise_ns = 100.0;
  double fall_ns = 300.0;
  double height_jitter = 0.03;
  double noise = 0.0;
  double blackbody_prob = 0.0;
  double blackbody_height = 0.6;
  double timestamp_level = 0.20;

  void validate() const;
  static TraceSynthesis from_config(const Config& cfg);

  /// Trace whose timestamp-level crossing is at `detect_ns` for a pulse of
  /// relative height `height`.
  PulseTrace make_trace(double detect_ns, double height, CounterRng& gen) const;
};

struct IngestOptions {
  ThresholdRule rule;
  double slot_period_ns = 1000.0;
  double offset_ns = 0.0;

  static IngestOptions from_config(const Config& cfg);
};

/// Sink that turns a simulated record stream into the raw files
/// alice.traces, bob.traces, alice.settings, bob.settings under `dir`.
/// Record times are taken as ns from the slot start. Records must arrive
/// with consecutive indices starting at 0.
class RawRunWriter {
 public:
  RawRunWriter(const std::filesystem::path& dir, const TraceSynthesis& synth, const IngestOptions& slots,
               const TrialTiming& timing, std::uint64_t seed);

  void write(const TrialRecord& rec);
  void close();

 private:
  void emit(Channel ch, const TrialRecord& rec, std::optional<std::uint32_t> time);

  std::filesystem::path dir_;
  TraceSynthesis synth_;
  IngestOptions slots_;
  TrialTiming timing_;
  std::uint64_t seed_;
  TraceWriter alice_;
  TraceWriter bob_;
  std::vector<std::uint8_t> settings_a_;
  std::vector<std::uint8_t> settings_b_;
  bool closed_ = false;
};

/// Reads the four raw files from `dir` and emits the assembled records.
IngestStats ingest_directory(const std::filesystem::path& dir, const IngestOptions& opts, const RecordSink& sink);

}  // namespace bell
