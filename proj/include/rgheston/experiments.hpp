#pragma once
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rgheston/extensions.hpp"
#include "rgheston/model.hpp"
#include "rgheston/random_grids.hpp"
#include "rgheston/reference.hpp"

namespace rgheston {

enum class ModelKind { heston, multifactor, general };
enum class ExperimentMode { convergence, selfdiff, variance, timing };
enum class ReferenceKind { fourier, mc, none };

struct ExperimentConfig {
  std::string label = "custom";
  ModelKind model = ModelKind::heston;
  ExperimentMode mode = ExperimentMode::convergence;

  HestonParams params;
  double y0 = 0.0;
  double spot = 100.0;
  double strike = 100.0;
  double T = 1.0;

  std::vector<SchemeKind> schemes{SchemeKind::NV};  // several only in variance mode
  std::vector<CouplingKind> couplings{CouplingKind::Standard};
  std::vector<int> orders{1, 2};
  std::vector<int> n_list{2};
  PayoffKind payoff = PayoffKind::european_put;
  double eps = 1e-2;
  std::uint64_t seed = 1;
  std::uint64_t pilot = 10'000;
  unsigned workers = 0;
  std::uint64_t samples = 1'000'000;  // per row in variance mode

  ExpKernel kernel = ExpKernel::trivial();
  std::vector<HestonBlock> extra_blocks;  // general model: blocks after the first
  JumpSpec jumps;
  RateSpec rate;

  ReferenceKind reference = ReferenceKind::fourier;
  int reference_n = 32;
  double reference_eps = 5e-4;

  std::string out;
  bool record_timing = true;

  // Settings as read (preset expanded, overrides applied), for the metadata.
  std::map<std::string, std::string> settings;

  [[nodiscard]] Point start() const;
  [[nodiscard]] Payoff make_payoff() const;
  [[nodiscard]] GeneralModelSpec general_spec() const;
  void validate() const;
};

// Parses "key = value" lines ('#' starts a comment) into raw settings.
[[nodiscard]] std::map<std::string, std::string> parse_settings(const std::string& text);

// Builds a config from raw settings: a "preset" entry is expanded first and
// the other entries override it. Unknown keys and, without a preset, missing
// required keys are reported together.
[[nodiscard]] ExperimentConfig config_from_settings(const std::map<std::string, std::string>& settings);

[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

[[nodiscard]] ExperimentConfig preset(const std::string& name);
[[nodiscard]] std::vector<std::string> preset_names();
[[nodiscard]] const std::vector<std::string>& required_keys();
[[nodiscard]] const std::vector<std::string>& known_keys();

struct CsvRow {
  std::string label;
  int order = 0;
  int n = 0;
  double estimate = 0.0;
  double half_width = 0.0;
  std::uint64_t M1 = 0;
  std::uint64_t M2 = 0;
  double sigma2_sq = 0.0;
  double V_n = 0.0;
  double Gamma_n = 0.0;
  double wall_ms = 0.0;
};

struct ExperimentSummary {
  std::optional<double> reference;
  std::map<int, SlopeFit> slopes;        // keyed by order
  std::map<int, double> timing_ratio;    // timing mode: wall(order 1, n^2) / wall(order 2, n)
  std::vector<std::string> notes;
};

struct ExperimentResult {
  std::vector<CsvRow> rows;
  ExperimentSummary summary;
};

[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config);

[[nodiscard]] std::string csv_header();
[[nodiscard]] std::string to_csv_line(const CsvRow& row);
void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
void write_metadata(const std::filesystem::path& path, const ExperimentConfig& config,
                    const ExperimentSummary& summary);
[[nodiscard]] std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result);

[[nodiscard]] std::string version_string();

}  // namespace rgheston
