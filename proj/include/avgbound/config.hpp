#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgbound/averaged_flow.hpp"
#include "avgbound/direct.hpp"
#include "avgbound/ode.hpp"
#include "avgbound/rigid_body.hpp"
#include "avgbound/seminorm.hpp"

namespace avgbound {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key/value run configuration with dotted section prefixes:
///
///   example.figure = a          # preset; explicit example.* keys override
///   example.epsilon = 1e-2
///   seminorms.kind = partition
///   seminorms.blocks = {1,2}
///   n_op.abs_tol = 1e-10
///
/// '#' starts a comment, blank lines are ignored, keys may not repeat and
/// unknown keys are rejected.  Admissibility of the example parameters is
/// NOT checked here (sweeps validate per grid point).
struct RunConfig {
  std::string example_id = "rigid_body";
  rigid_body::Params params{};

  AveragedFlow::Source flow_source = AveragedFlow::Source::closed_form;

  SeminormFamily::Kind family_kind = SeminormFamily::Kind::component;
  std::vector<std::vector<std::size_t>> blocks;  // 1-based, partition only

  IntegratorConfig n_cfg{};
  DirectConfig l_cfg{};

  std::size_t sample_count = 1000;  // comparison grid size
  std::size_t windows = 20;
  std::size_t audit_nodes = 10000;
  std::size_t output_rows = 2001;  // rows per emitted curve CSV

  std::string output_dir = ".";
  std::uint64_t seed = 12345;

  std::size_t check_samples = 1000;   // identity-suite sample count
  std::size_t family_trials = 10000;  // seminorm axiom audit trials
  std::size_t bundle_trials = 200;    // bundle validity/contract trials
  double fd_step = 1e-6;

  bool corrupt_s = false;  // debug fault: doubles s before self-checks

  /// Sweep grids (cross product in this order); a dimension without a key
  /// stays at the base value, a key with an empty list yields an empty
  /// grid, and no sweep key at all also means an empty grid.
  std::optional<std::vector<double>> sweep_epsilon, sweep_mu, sweep_lambda1, sweep_lambda2,
      sweep_U;
  std::size_t sweep_threads = 0;  // 0 = hardware concurrency
  bool has_sweep_keys = false;
};

/// Parses configuration text.  Throws ConfigError on syntax errors,
/// unknown or duplicate keys, and out-of-range plumbing values.
[[nodiscard]] RunConfig parse_config(const std::string& text);

/// Reads the file and parses it.  Throws ConfigError if unreadable.
[[nodiscard]] RunConfig load_config(const std::string& path);

}  // namespace avgbound
