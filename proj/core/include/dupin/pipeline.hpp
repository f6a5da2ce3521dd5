#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dupin/net.hpp"

namespace dupin {

inline constexpr const char* kPipelineSchema = "dupin.pipeline/1";

// Parsed pipeline document. Steps keep their JSON text and are decoded when run, so a
// spec round-trips unchanged into the hash.
struct PipelineSpec {
  std::string seed_name;
  std::string seed_params;  // JSON object
  std::string seed_grid;    // JSON object, may be empty
  std::vector<std::string> step_ops;
  std::vector<std::string> steps;  // JSON objects
  double verify_tol = 1e-5;
  double triple_tol = 1e-6;
  std::string out_dir = "out";
  std::string canonical;  // canonical JSON text of the whole document
  std::string hash;       // SHA-256 of `canonical`
};

// Rejects unknown keys and unknown step ops.
PipelineSpec parse_pipeline(const std::string& text);

struct RunOptions {
  std::string out_dir;             // overrides the spec when set
  double tol = 0.0;                // overrides verify_tol when positive
  std::vector<int> grid;           // overrides seed node counts when set
  std::set<std::string> only_ops;  // empty: run every step
  bool mask_report = false;
  std::optional<ImmersionSample> input;  // replaces the seed when set
};

struct PipelineResult {
  int status = 0;
  ImmersionSample sample;
  std::vector<std::string> artifacts;
  std::vector<std::string> log;
  std::vector<std::string> chain;
};

// Throws Error(StepFailure) naming the failing step; gated checks failing inside a verify
// step set a nonzero status instead.
PipelineResult run_pipeline(const PipelineSpec& spec, const RunOptions& opt = {});

// Seed constructor by name: circle, torus, cylinder, sphere, plane, ellipsoid, helix.
ImmersionSample make_seed(const std::string& name, const std::string& params_json, const std::string& grid_json,
                          const std::vector<int>& counts_override = {});

std::string sha256_hex(const std::string& data);

}  // namespace dupin
