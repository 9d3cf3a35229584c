#ifndef TFPROP_RUNNER_HPP
#define TFPROP_RUNNER_HPP

#include "tfprop/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tfprop {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

struct Artifact {
  std::string name;  // relative path inside the output directory
  std::string bytes;
};

/// Output files of a run, kept in memory until written.
class ArtifactSet {
 public:
  void add(std::string name, std::string bytes);
  const std::vector<Artifact>& files() const { return files_; }
  const Artifact* find(const std::string& name) const;
  /// JSON listing every file (sorted by name) with size and SHA-256.
  std::string manifest() const;
  std::string manifest_hash() const { return sha256_hex(manifest()); }
  /// Writes every file and manifest.json atomically under dir.
  void write(const std::filesystem::path& dir) const;

 private:
  std::vector<Artifact> files_;
};

/// A named pass/fail check; failures make the run exit with status 1.
struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  int status = 0;  // 0 ok, 1 a numerical check failed
  std::vector<CheckResult> checks;
  std::vector<std::string> messages;
  std::string manifest_hash;
  std::filesystem::path dir;
};

/// Runs the experiment and writes its artifacts plus manifest.json under out_dir.
/// Throws ConfigError for invalid configurations.
RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Long-format plot tables (one observation per row) derived from result files:
/// decay-fit envelopes, modulation-norm ratios and annulus scores.
std::vector<Artifact> plot_tables(const std::vector<Artifact>& results);
/// Reads a run directory's manifest and writes its plot tables next to it; returns their names.
std::vector<std::string> emit_plot_data(const std::filesystem::path& dir);

/// Acceptance criteria 1..13 (all when ids is empty); tables are added to out.
std::vector<CheckResult> run_acceptance(const ExperimentConfig& config, const std::vector<int>& ids, ArtifactSet& out);

// Shared formatting.
std::string fmt_num(double v);
std::string csv_line(const std::vector<std::string>& cells);

}  // namespace tfprop

#endif  // TFPROP_RUNNER_HPP
