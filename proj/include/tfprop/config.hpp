#ifndef TFPROP_CONFIG_HPP
#define TFPROP_CONFIG_HPP

#include "tfprop/gabor_matrix.hpp"
#include "tfprop/modulation.hpp"
#include "tfprop/singularity.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tfprop {

/// Invalid configuration or command line (exit status 2).
struct ConfigError : Error { using Error::Error; };

struct HamiltonianSpec {
  std::string name = "harmonic";  // builtin name, or "expression"
  double param = 0.0;
  std::string potential;   // kinetic_plus_potential
  std::string expression;  // name == "expression"
};

struct GridSpec {
  Index n = 4096;
  double dx = 1.0 / 32.0;
};

struct LatticeSpec {
  double x_lo = -4, x_hi = 4, x_step = 0.5;
  double eta_lo = -4, eta_hi = 4, eta_step = 0.5;
  PhaseLattice make(int d) const { return PhaseLattice::box(d, x_lo, x_hi, x_step, eta_lo, eta_hi, eta_step); }
};

struct SignalSpec {
  std::string kind = "gaussian";  // gaussian, ground_state, chirp, file
  double shift = 0.0;             // ground_state centre
  double kick = 0.0;              // ground_state momentum (radians per unit x)
  double beta = 1.0;              // chirp rate
  double half_width = 8.0;
  double plateau = 6.0;
  std::string file;  // signal record
};

struct ExperimentConfig {
  std::string kind = "flow";  // flow, phase, propagate, matrix, decay-fit, modnorm, singularity, acceptance
  int d = 1;
  HamiltonianSpec hamiltonian;
  std::string window = "gaussian";
  GridSpec grid;
  LatticeSpec w_lattice;
  LatticeSpec z_lattice{-12, 12, 0.5, -12, 12, 0.5};
  std::vector<double> t{0.5};
  std::string method = "spectral";
  std::string route = "automatic";
  double dt = 1e-3;
  double segment = 0.1;
  std::map<std::string, double> tolerances;
  std::string output = "out";
  std::size_t workers = 1;
  std::uint64_t seed = 1;

  // flow and phase
  std::vector<std::vector<double>> points;
  std::string points_file;  // CSV y1..yd, eta1..etad (header row)

  // propagate
  SignalSpec signal;
  std::string output_signal = "signal.bin";

  // matrix and decay-fit
  std::string operator_symbol;  // empty: the propagator e^{itH}
  std::string matrix_file;      // decay-fit input; empty computes the matrix
  std::string fit_map = "flow"; // flow or identity
  DecayFitOptions fit;

  // modnorm
  std::vector<double> p{1.0, 2.0, std::numeric_limits<double>::infinity()};
  std::vector<double> r{-2.0, 0.0, 2.0};
  ModNormOptions norm;

  // singularity
  std::vector<std::string> regions;
  std::vector<double> deltas{0.05, 0.1, 0.2};
  double reg_p = 2.0;
  double reg_r = 0.0;
  bool propagate_regions = false;  // also evolve by e^{itH} and transport the regions
  LatticeSpec before_lattice{-28, 28, 0.25, -28, 28, 0.25};
  LatticeSpec after_lattice{-120, 120, 0.25, -28, 28, 0.25};

  // acceptance
  std::vector<int> criteria;  // empty: all
};

/// Parses the YAML text; unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical YAML form; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const ExperimentConfig& c);
/// Resolves names and ranges; throws ConfigError naming the offending field.
void validate(const ExperimentConfig& c);

double tolerance(const ExperimentConfig& c, const std::string& key, double fallback);
HamiltonianSymbol make_symbol(const HamiltonianSpec& h, int d);
SpectralRoute parse_route(const std::string& s);
std::string route_name(SpectralRoute r);

}  // namespace tfprop

#endif  // TFPROP_CONFIG_HPP
