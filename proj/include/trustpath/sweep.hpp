#pragma once

// Parameter sweeps over the full pipeline with per-value mean/std summaries.
//
// Task parameters (c_tf, c_ec, s_tf_soft, s_tf_hard, size, density) reuse one
// trained model per seed. Behavior parameters (plr, tfsr) rewrite the ground
// truth of a fixed, seeded subset of non-owner terminals and retrain per value.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trustpath/config.hpp"

namespace trustpath {

enum class SweepParameter { CTf, CEc, Plr, Tfsr, STfSoft, STfHard, Size, Density };

SweepParameter sweep_parameter_from_string(std::string_view name);
std::string_view to_string(SweepParameter p);
bool retrains(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter{SweepParameter::CTf};
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  double swept_fraction{0.8};

  void validate() const;
  static SweepSpec from_config(const SweepConfig& c);
};

struct SweepRow {
  std::string kind;  // "run", "mean" or "std"
  std::string parameter;
  double value{};
  std::optional<std::uint64_t> seed;
  double avg_voc{};  // 0 when no path was found
  double trusted_terminals{};
  double trusted_ecs{};
  double rounds{};
  double runtime_s{};
};

struct SweepResult {
  std::vector<SweepRow> runs;
  std::vector<SweepRow> means;  // one per grid value, grid order
  std::vector<SweepRow> stds;
};

/// Scenario seed per repetition is the listed seed; log and training seeds are
/// offset from the base configuration by the same amount.
SweepResult run_sweep(const SweepSpec& spec, const Config& base);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

enum class Trend { NonIncreasing, NonDecreasing };

/// Weak monotonicity with a fixed round-off allowance.
inline constexpr double kMonotoneSlack = 1e-12;
bool weakly_monotone(const std::vector<double>& series, Trend trend,
                     double slack = kMonotoneSlack);

}  // namespace trustpath
