#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esdlab/ensembles.hpp"
#include "esdlab/hermitization.hpp"
#include "esdlab/limits.hpp"
#include "esdlab/matrix.hpp"
#include "esdlab/measures.hpp"

namespace esdlab {

enum class ExperimentKind { circular, universality, hermitize, ds_solve, tails, lemmas };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

enum class ReferenceLaw { circular, mp_derived };

std::string to_string(ReferenceLaw law);
ReferenceLaw parse_reference_law(const std::string& name);

struct DsConfig {
  std::vector<double> h_atoms{0.0};
  std::vector<double> h_weights{1.0};
  double c = 1.0;
  double x_min = 0.0;
  double x_max = 4.0;
  std::size_t x_points = 1601;
  std::vector<double> eta_schedule{1e-1, 1e-2, 1e-3};
  std::optional<std::pair<double, double>> check_window = std::make_pair(0.5, 3.5);
  double damping = 0.5;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
  bool probe_uniqueness = true;

  friend bool operator==(const DsConfig&, const DsConfig&) = default;
};

struct TailConfig {
  std::size_t distance_n = 2000;
  std::size_t distance_d = 1000;
  std::size_t distance_trials = 200;
  std::vector<double> talagrand_r{1.0, 2.0, 3.0, 4.0};

  friend bool operator==(const TailConfig&, const TailConfig&) = default;
};

struct LemmaConfig {
  std::size_t cases = 500;
  std::size_t max_size = 30;

  friend bool operator==(const LemmaConfig&, const LemmaConfig&) = default;
};

/// One experiment run. Serialized as strict JSON (unknown keys rejected);
/// every field is written back, so parse(serialize(c)) == c.
struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  ExperimentKind experiment = ExperimentKind::circular;
  std::vector<std::size_t> n_list{250, 500, 1000};
  std::size_t trials = 10;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";

  ScalarDistribution distribution_x = ScalarDistribution::of(DistributionKind::real_gaussian);
  ScalarDistribution distribution_y = ScalarDistribution::of(DistributionKind::bernoulli);
  /// Draw Y from X's stream (with equal laws this makes A and B identical).
  bool shared_stream = false;

  BaseMatrixSpec base;
  AssemblyMode mode = AssemblyMode::shift;
  ProfileSpec profile;
  BaseMatrixSpec left;   // sandwich K
  BaseMatrixSpec right;  // sandwich L

  std::vector<cplx> z_list{0.0, 0.5, cplx(0.5, 0.5), 2.0};
  std::optional<LatticeSpec> lattice;
  std::vector<std::pair<double, double>> uv_list;
  ReferenceLaw reference = ReferenceLaw::circular;
  double regularization_exponent = 0.1;

  /// "none", "first" (trial 0 of each n) or "all".
  std::string figures = "first";

  DsConfig ds;
  TailConfig tails;
  LemmaConfig lemmas;

  /// Overrides of the experiment's default tolerances; keys must be known.
  std::map<std::string, double> thresholds;

  /// Default tolerances for `experiment` merged with the overrides.
  std::map<std::string, double> effective_thresholds() const;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Default tolerance table for an experiment.
std::map<std::string, double> default_thresholds(ExperimentKind kind);

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

struct TrialRecord {
  std::string experiment;
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> metrics;

  void add(std::string name, double value) { metrics.emplace_back(std::move(name), value); }
  /// First metric called `name`; throws std::out_of_range if absent.
  double get(const std::string& name) const;
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  /// Wall-clock runtimes (kept apart so records stay reproducible).
  std::vector<TrialRecord> timings;
  std::vector<Assertion> assertions;
  /// Number of trials whose kernels raised a numerical failure.
  std::size_t numerical_failures = 0;
  std::vector<std::filesystem::path> artifacts;

  bool all_passed() const;
};

/// Stream index for (n, trial, role): (n << 32) + (trial << 2) + role.
/// Roles: 0 = X, 1 = Y, 2 = base and profile, 3 = auxiliary.
std::uint64_t stream_index(std::size_t n, std::size_t trial, unsigned role);

struct RunOptions {
  unsigned threads = 1;
  /// Write CSV, SVG and manifest files under config.output_dir.
  bool write_outputs = true;
};

ExperimentResult run_circular_law(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_universality(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_hermitization_check(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_ds_solve(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_tail_suite(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_lemma_suite(const ExperimentConfig& config, const RunOptions& options = {});

/// Dispatches on config.experiment.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// ---- emission ----

/// 17 significant digits, "." separator; infinities as "inf" / "-inf".
std::string format_number(double x);

/// trials.csv: experiment,n,trial,seed,metric,value (header-only when empty).
void write_trials_csv(const std::vector<TrialRecord>& records, const std::filesystem::path& path);

struct FieldRow {
  cplx z;
  LogMagnitude f_n = LogMagnitude::minus_infinity();
  double f_reg = 0.0;
  double reference = 0.0;
};

/// field.csv: re_z,im_z,f_n,f_reg,reference,gap (gap = |f_n - reference|).
void write_field_csv(const std::vector<FieldRow>& rows, const std::filesystem::path& path);

/// ds.csv: x,eta,re_m,im_m,density, one block per eta level.
void write_ds_csv(const StieltjesSolution& solution, const std::filesystem::path& path);

/// Static SVG scatter on viewBox [-2.5, 2.5]^2: axes, a unit circle at
/// `center`, one 1px circle per atom (imaginary axis pointing up).
std::string scatter_svg(const EmpiricalMeasure2D& mu, cplx center);
void write_scatter_svg(const EmpiricalMeasure2D& mu, cplx center, const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// manifest.json: config echo, assertions and SHA-256 of each artifact.
void write_manifest(const ExperimentConfig& config, const ExperimentResult& result,
                    const std::filesystem::path& dir);

}  // namespace esdlab
