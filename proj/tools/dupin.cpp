// dupin: seeds, transforms, recursion steps, verification and export from the command line.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dupin/errors.hpp"
#include "dupin/io.hpp"
#include "dupin/pipeline.hpp"

using nlohmann::json;

namespace {

struct Common {
  std::string out;
  double tol = 0.0;
  std::string grid;
  bool mask_report = false;
};

std::vector<int> parse_counts(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      dupin::fail(dupin::ErrorCode::ParseError, "--grid expects n1,n2,...; got '" + s + "'");
    }
  }
  return out;
}

dupin::RunOptions options(const Common& c) {
  dupin::RunOptions o;
  o.out_dir = c.out;
  o.tol = c.tol;
  o.grid = c.grid.empty() ? std::vector<int>{} : parse_counts(c.grid);
  o.mask_report = c.mask_report;
  return o;
}

// Wraps explicit steps into a pipeline document so every subcommand shares the runner,
// its validation and its provenance.
dupin::PipelineSpec synthetic(const json& steps, const std::string& seed = "plane", const json& params = json::object()) {
  json doc = {{"schema", dupin::kPipelineSchema}, {"seed", {{"name", seed}, {"params", params}}}, {"steps", steps}};
  return dupin::parse_pipeline(doc.dump());
}

int finish(const dupin::PipelineResult& r) {
  for (const auto& l : r.log) std::cout << l << '\n';
  for (const auto& a : r.artifacts) std::cout << "wrote " << a << '\n';
  return r.status;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--tol", c.tol, "Verification tolerance override");
  app->add_option("--grid", c.grid, "Node counts n1,n2,... for the seed");
  app->add_flag("--mask-report", c.mask_report, "Write the masked fraction after each step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Construction and verification of Dupin submanifolds"};
  app.require_subcommand(1);
  std::string level = "warn";
  app.add_option("--log-level", level, "trace|debug|info|warn|error|off");
  Common c;

  auto* run = app.add_subcommand("run", "Run a pipeline document");
  std::string spec_path;
  run->add_option("--spec", spec_path, "Pipeline JSON")->required();
  add_common(run, c);

  auto* seed = app.add_subcommand("seed", "Write a seed sample as JSON");
  std::string seed_name = "circle", seed_params = "{}";
  seed->add_option("--name", seed_name, "circle|torus|cylinder|sphere|plane|ellipsoid|helix");
  seed->add_option("--params", seed_params, "Seed parameters as a JSON object");
  seed->add_option("--spec", spec_path, "Take the seed from a pipeline JSON instead");
  add_common(seed, c);

  std::string input, chain_path, format = "json", slice;
  auto* transform = app.add_subcommand("transform", "Apply a chain of catalog transforms to a sample");
  transform->add_option("--input", input, "Sample JSON")->required();
  transform->add_option("--chain", chain_path, "Transform chain JSON array")->required();
  add_common(transform, c);

  std::vector<int> subbundle{0};
  std::vector<double> B0;
  std::string init, ygrid;
  int expect_k = 0;
  auto* recurse = app.add_subcommand("recurse", "One N-Ribaucour recursion step with its gates");
  recurse->add_option("--input", input, "Sample JSON carrying a triple")->required();
  recurse->add_option("--subbundle", subbundle, "Normal frame indices spanning N")->delimiter(',');
  recurse->add_option("--B0", B0, "Codazzi tensor values at the base node")->delimiter(',');
  recurse->add_option("--init", init, "Initial data {phi, gamma, beta} at the base node as JSON");
  recurse->add_option("--ygrid", ygrid, "y-grid box {counts, lo, hi} as JSON");
  recurse->add_option("--expect-k", expect_k, "Required number of principal normals of the output");
  add_common(recurse, c);

  auto* verify = app.add_subcommand("verify", "Dupin diagnostics of a sample");
  verify->add_option("--input", input, "Sample JSON")->required();
  verify->add_option("--expect-k", expect_k, "Required number of principal normals");
  add_common(verify, c);

  auto* exp = app.add_subcommand("export", "Export a sample as obj|ply|csv|json");
  exp->add_option("--input", input, "Sample JSON")->required();
  exp->add_option("--format", format, "obj|ply|csv|json")->check(CLI::IsMember({"obj", "ply", "csv", "json"}));
  exp->add_option("--slice", slice, "Grid axes a,b spanning the mesh");
  add_common(exp, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(level));

  try {
    dupin::RunOptions o = options(c);
    if (run->parsed()) return finish(dupin::run_pipeline(dupin::parse_pipeline(dupin::read_text(spec_path)), o));

    if (seed->parsed()) {
      dupin::PipelineSpec s;
      if (!spec_path.empty()) {
        s = dupin::parse_pipeline(dupin::read_text(spec_path));
        s.steps.clear();
        s.step_ops.clear();
      } else {
        s = synthetic(json::array(), seed_name, json::parse(seed_params));
      }
      return finish(dupin::run_pipeline(s, o));
    }

    o.input = dupin::sample_from_json(dupin::read_text(input));
    if (o.out_dir.empty()) o.out_dir = "out";
    json steps = json::array();
    if (transform->parsed()) {
      steps.push_back({{"op", "ltransform"}, {"transforms", json::parse(dupin::read_text(chain_path))}});
      steps.push_back({{"op", "export"}, {"format", "json"}, {"path", "transformed.json"}});
    } else if (recurse->parsed()) {
      json st = {{"op", "recursion"}, {"subbundle", subbundle}};
      if (!B0.empty()) st["B0"] = B0;
      if (!init.empty()) st["init"] = json::parse(init);
      if (!ygrid.empty()) st["ygrid"] = json::parse(ygrid);
      if (expect_k > 0) st["expect_k"] = expect_k;
      steps.push_back(st);
      steps.push_back({{"op", "export"}, {"format", "json"}, {"path", "recursed.json"}});
    } else if (verify->parsed()) {
      json st = {{"op", "verify"}, {"name", "verify"}};
      if (expect_k > 0) st["expect_k"] = expect_k;
      steps.push_back(st);
    } else if (exp->parsed()) {
      json st = {{"op", "export"}, {"format", format}, {"path", "sample." + format}};
      if (!slice.empty()) {
        const auto ab = parse_counts(slice);
        if (ab.size() != 2) dupin::fail(dupin::ErrorCode::ParseError, "--slice expects a,b");
        st["slice"] = {{"a", ab[0]}, {"b", ab[1]}};
      }
      steps.push_back(st);
    }
    return finish(dupin::run_pipeline(synthetic(steps), o));
  } catch (const dupin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case dupin::ErrorCode::ParseError:
        return 2;
      case dupin::ErrorCode::StepFailure:
        return 1;
      default:
        return 3;
    }
  } catch (const json::exception& e) {
    std::cerr << "error: ParseError: " << e.what() << '\n';
    return 2;
  }
}
