#include "dupin/pipeline.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "dupin/errors.hpp"
#include "dupin/integrable.hpp"
#include "dupin/io.hpp"
#include "dupin/moebius.hpp"
#include "dupin/ribaucour.hpp"
#include "dupin/seeds.hpp"
#include "dupin/verify.hpp"

namespace dupin {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ParseError, where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) fail(ErrorCode::ParseError, "unknown key '" + k + "' in " + where);
  }
}

const std::map<std::string, std::vector<const char*>>& step_keys() {
  static const std::map<std::string, std::vector<const char*>> m = {
      {"validate_triple", {"op", "tol"}},
      {"ltransform", {"op", "transforms"}},
      {"tube", {"op", "subbundle", "radius", "nodes"}},
      {"ribaucour", {"op", "B0", "init"}},
      {"n_ribaucour", {"op", "subbundle", "B0", "init", "ygrid"}},
      {"recursion", {"op", "subbundle", "B0", "init", "ygrid", "expect_k"}},
      {"verify", {"op", "expect_k", "holonomic", "name"}},
      {"export", {"op", "format", "path", "slice"}},
  };
  return m;
}

const std::map<std::string, std::vector<const char*>>& seed_keys() {
  static const std::map<std::string, std::vector<const char*>> m = {
      {"circle", {"radius", "ambient", "perturb"}},
      {"torus", {"R", "r", "ambient", "perturb"}},
      {"cylinder", {"rho", "perturb"}},
      {"sphere", {"radius", "perturb"}},
      {"plane", {"perturb"}},
      {"ellipsoid", {"a", "b", "c"}},
      {"helix", {"a", "b"}},
  };
  return m;
}

void check_keys(const json& j, const std::vector<const char*>& keys, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ParseError, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      fail(ErrorCode::ParseError, "unknown key '" + k + "' in " + where);
}

Grid default_grid(const std::string& name) {
  if (name == "circle") return Grid({48}, {kTwoPi / 48}, {0.0});
  if (name == "torus") return Grid({48, 48}, {kTwoPi / 48, kTwoPi / 48}, {0.0, 0.0});
  if (name == "cylinder") return Grid({48, 21}, {kTwoPi / 48, 0.1}, {0.0, -1.0});
  if (name == "sphere" || name == "ellipsoid") return Grid({41, 48}, {(std::numbers::pi - 0.6) / 40, kTwoPi / 48}, {0.3, 0.0});
  if (name == "plane") return Grid({21, 21}, {0.1, 0.1}, {-1.0, -1.0});
  if (name == "helix") return Grid({81}, {4.0 * std::numbers::pi / 80}, {0.0});
  fail(ErrorCode::ParseError, "unknown seed '" + name + "'");
}

// {counts, lo, hi} with inclusive ends.
Grid grid_from_box(const json& j, const std::string& where) {
  allow_keys(j, {"counts", "lo", "hi"}, where);
  const auto n = j.at("counts").get<std::vector<int>>();
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  if (n.size() != lo.size() || n.size() != hi.size()) fail(ErrorCode::ParseError, where + ": size mismatch");
  std::vector<double> h(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    if (n[a] < 1) fail(ErrorCode::ParseError, where + ": counts must be positive");
    h[a] = n[a] > 1 ? (hi[a] - lo[a]) / (n[a] - 1) : 1.0;
  }
  return Grid(n, h, lo);
}

Grid with_counts(const Grid& g, const std::vector<int>& counts) {
  if (counts.empty()) return g;
  if (static_cast<int>(counts.size()) != g.dims())
    fail(ErrorCode::InvalidArgument, "--grid needs one count per seed axis");
  std::vector<double> h(counts.size());
  for (int a = 0; a < g.dims(); ++a) {
    if (counts[a] < 2) fail(ErrorCode::InvalidArgument, "--grid counts must be at least 2");
    h[a] = g.spacing(a) * (g.count(a) - 1) / (counts[a] - 1);
  }
  return Grid(counts, h, g.origins());
}

LinearInit init_from(const json& j, const Triple& t) {
  LinearInit init;
  init.gamma.assign(t.coords(), 0.0);
  init.beta.assign(t.normals, 0.0);
  if (j.is_null()) return init;
  allow_keys(j, {"phi", "gamma", "beta"}, "init");
  init.phi = j.value("phi", 1.0);
  if (j.contains("gamma")) init.gamma = j.at("gamma").get<std::vector<double>>();
  if (j.contains("beta")) init.beta = j.at("beta").get<std::vector<double>>();
  if (static_cast<int>(init.gamma.size()) != t.coords() || static_cast<int>(init.beta.size()) != t.normals)
    fail(ErrorCode::InvalidArgument, "init gamma/beta sizes do not match the triple");
  return init;
}

std::vector<double> B0_from(const json& j, const Triple& t) {
  std::vector<double> B0(t.classes(), 1.0);
  if (j.contains("B0")) B0 = j.at("B0").get<std::vector<double>>();
  if (static_cast<int>(B0.size()) != t.classes()) fail(ErrorCode::InvalidArgument, "B0 needs one value per class");
  return B0;
}

const Triple& need_triple(const ImmersionSample& s) {
  if (!s.triple) fail(ErrorCode::InvalidArgument, "step needs a sample carrying a triple");
  return *s.triple;
}

double max_masked(const ImmersionSample& s) { return s.pos.masked_fraction(); }

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

PipelineSpec parse_pipeline(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("pipeline JSON: ") + e.what());
  }
  try {
    allow_keys(j, {"schema", "description", "seed", "steps", "tolerances", "output"}, "pipeline");
    if (j.value("schema", std::string{}) != kPipelineSchema)
      fail(ErrorCode::ParseError, std::string("schema must be '") + kPipelineSchema + "'");
    PipelineSpec spec;
    const json& seed = j.at("seed");
    allow_keys(seed, {"name", "params", "grid"}, "seed");
    spec.seed_name = seed.at("name").get<std::string>();
    auto sk = seed_keys().find(spec.seed_name);
    if (sk == seed_keys().end()) fail(ErrorCode::ParseError, "unknown seed '" + spec.seed_name + "'");
    const json params = seed.value("params", json::object());
    check_keys(params, sk->second, "seed.params");
    spec.seed_params = params.dump();
    if (seed.contains("grid")) {
      grid_from_box(seed.at("grid"), "seed.grid");
      spec.seed_grid = seed.at("grid").dump();
    }
    for (const auto& st : j.value("steps", json::array())) {
      const auto op = st.at("op").get<std::string>();
      auto it = step_keys().find(op);
      if (it == step_keys().end()) fail(ErrorCode::ParseError, "unknown step op '" + op + "'");
      check_keys(st, it->second, "step '" + op + "'");
      if (op == "ltransform") chain_from_json(st.at("transforms").dump());
      spec.step_ops.push_back(op);
      spec.steps.push_back(st.dump());
    }
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      allow_keys(t, {"verify", "triple"}, "tolerances");
      spec.verify_tol = t.value("verify", spec.verify_tol);
      spec.triple_tol = t.value("triple", spec.triple_tol);
      if (!(spec.verify_tol > 0) || !(spec.triple_tol > 0)) fail(ErrorCode::ParseError, "tolerances must be positive");
    }
    if (j.contains("output")) {
      allow_keys(j.at("output"), {"dir"}, "output");
      spec.out_dir = j.at("output").value("dir", spec.out_dir);
    }
    spec.canonical = j.dump();
    spec.hash = sha256_hex(spec.canonical);
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("pipeline: ") + e.what());
  }
}

ImmersionSample make_seed(const std::string& name, const std::string& params_json, const std::string& grid_json,
                          const std::vector<int>& counts_override) {
  const json p = params_json.empty() ? json::object() : json::parse(params_json);
  Grid g = grid_json.empty() ? default_grid(name) : grid_from_box(json::parse(grid_json), "seed.grid");
  g = with_counts(g, counts_override);
  ImmersionSample s;
  if (name == "circle")
    s = circle(p.value("radius", 1.0), g, p.value("ambient", 3));
  else if (name == "torus")
    s = torus(p.value("R", 2.0), p.value("r", 1.0), g, p.value("ambient", 3));
  else if (name == "cylinder")
    s = cylinder(p.value("rho", 1.0), g);
  else if (name == "sphere")
    s = sphere_patch(p.value("radius", 1.0), g);
  else if (name == "plane")
    s = plane(g);
  else if (name == "ellipsoid")
    s = ellipsoid(p.value("a", 1.0), p.value("b", 1.5), p.value("c", 2.0), g);
  else if (name == "helix")
    s = helix_frenet(p.value("a", 1.0), p.value("b", 0.5), g);
  else
    fail(ErrorCode::ParseError, "unknown seed '" + name + "'");

  const double eps = p.value("perturb", 0.0);
  if (eps != 0.0 && s.triple) {
    std::mt19937_64 rng(20261015);
    std::uniform_real_distribution<double> U(-eps, eps);
    for (auto& x : s.triple->v[0].values) x += U(rng);
  }
  return s;
}

PipelineResult run_pipeline(const PipelineSpec& spec, const RunOptions& opt) {
  const std::string out_dir = opt.out_dir.empty() ? spec.out_dir : opt.out_dir;
  const double vtol = opt.tol > 0 ? opt.tol : spec.verify_tol;
  PipelineResult res;
  Provenance prov;
  prov.spec_hash = spec.hash;
  std::vector<std::pair<std::string, double>> masks;

  if (opt.input) {
    res.sample = *opt.input;
    res.log.push_back("input sample");
  } else {
    res.sample = make_seed(spec.seed_name, spec.seed_params, spec.seed_grid, opt.grid);
    res.log.push_back("seed " + spec.seed_name);
  }
  masks.emplace_back("seed", max_masked(res.sample));
  auto path = [&](const std::string& f) { return (std::filesystem::path(out_dir) / f).string(); };

  std::size_t ran = 0;
  for (std::size_t i = 0; i < spec.steps.size(); ++i) {
    const std::string& op = spec.step_ops[i];
    if (!opt.only_ops.empty() && !opt.only_ops.count(op)) continue;
    ++ran;
    const json st = json::parse(spec.steps[i]);
    const std::string where = "step " + std::to_string(i) + " (" + op + ")";
    ImmersionSample& cur = res.sample;
    try {
      if (op == "validate_triple") {
        const ResidualReport rep = validate_triple(need_triple(cur), st.value("tol", spec.triple_tol));
        if (!rep.pass) fail(ErrorCode::StepFailure, where + ": validate_triple failed\n" + rep.csv());
      } else if (op == "ltransform") {
        for (const auto& T : chain_from_json(st.at("transforms").dump())) {
          cur = apply_ltransform(cur, T);
          res.chain.push_back(T.describe());
        }
      } else if (op == "tube") {
        const auto idx = st.at("subbundle").get<std::vector<int>>();
        const double a = st.at("radius").get<double>();
        const int rank = static_cast<int>(idx.size());
        cur = generalized_tube(cur, idx, a, sphere_angle_grid(rank, st.value("nodes", 48)));
        res.chain.push_back("tube(" + std::to_string(a) + ")");
      } else if (op == "ribaucour") {
        const Triple& t = need_triple(cur);
        const BSolve B = solve_B(t, B0_from(st, t));
        const RibaucourSolution w = solve_linear(t, B.B, init_from(st.value("init", json()), t));
        cur = ribaucour_transform(cur, w).sample;
        res.chain.push_back("ribaucour");
      } else if (op == "n_ribaucour" || op == "recursion") {
        const Triple& t = need_triple(cur);
        if (op == "recursion") {
          const ResidualReport rep = validate_triple(t, spec.triple_tol);
          if (!rep.pass) fail(ErrorCode::StepFailure, where + ": validate_triple gate failed\n" + rep.csv());
        }
        const auto idx = st.at("subbundle").get<std::vector<int>>();
        const ParallelNormalSubbundle nsub = attach_subbundle(cur, idx);
        const BSolve B = solve_B(t, B0_from(st, t));
        RibaucourSolution w = solve_linear(t, B.B, init_from(st.value("init", json()), t));
        w = canonicalize(w, t, idx);
        const Grid yg = st.contains("ygrid") ? grid_from_box(st.at("ygrid"), "ygrid") : default_ygrid(nsub.rank());
        NRibaucourResult r = n_ribaucour_transform(cur, nsub, w, yg);
        if (op == "recursion") {
          const RegularityFlags f = regularity_predicates(cur, nsub, w, r);
          if (!f.regular) fail(ErrorCode::StepFailure, where + ": transform is not regular");
        }
        cur = std::move(r.sample);
        res.chain.push_back(op);
        if (op == "recursion") {
          const DiagnosticsReport d = diagnose(cur);
          double worst = 0.0;
          for (double x : d.dupin) worst = std::max(worst, x);
          const int want = st.value("expect_k", d.k);
          res.log.push_back(where + ": k = " + std::to_string(d.k) + ", dupin " + fmt::format("{:.3e}", worst));
          if (d.k != want || worst >= vtol) {
            res.status = 1;
            res.log.push_back(where + ": recursion output failed the k-Dupin gate");
          }
        }
      } else if (op == "verify") {
        const DiagnosticsReport d = diagnose(cur);
        const std::string name = st.value("name", "verify_" + std::to_string(i));
        write_text(path(name + ".json"), report_json(d, prov));
        write_text(path(name + ".csv"), d.csv());
        res.artifacts.push_back(path(name + ".json"));
        res.artifacts.push_back(path(name + ".csv"));
        double worst = 0.0;
        for (double x : d.dupin) worst = std::max(worst, x);
        bool ok = worst < vtol && d.flat_normal < vtol;
        if (st.contains("expect_k")) ok = ok && d.k == st.at("expect_k").get<int>();
        if (st.value("holonomic", false)) ok = ok && d.holonomic;
        res.log.push_back(where + ": k = " + std::to_string(d.k) + ", dupin " + fmt::format("{:.3e}", worst) +
                          (ok ? " pass" : " FAIL"));
        if (!ok) res.status = 1;
      } else if (op == "export") {
        MeshSlice sl;
        if (st.contains("slice")) {
          const json& s = st.at("slice");
          allow_keys(s, {"a", "b", "fixed"}, "slice");
          sl.a = s.value("a", 0);
          sl.b = s.value("b", 1);
          sl.fixed = s.value("fixed", std::vector<int>{});
        }
        prov.chain = res.chain;
        const std::string f = path(st.at("path").get<std::string>());
        export_sample(cur, st.at("format").get<std::string>(), f, sl, prov);
        res.artifacts.push_back(f);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StepFailure) throw;
      fail(ErrorCode::StepFailure, where + ": " + e.what());
    } catch (const json::exception& e) {
      fail(ErrorCode::StepFailure, where + ": " + e.what());
    }
    masks.emplace_back(where, max_masked(cur));
    spdlog::info("{} done, masked fraction {:.4f}", where, masks.back().second);
  }

  prov.chain = res.chain;
  if (ran == 0 && (opt.only_ops.empty() || spec.steps.empty())) {
    write_text(path("seed.json"), sample_to_json(res.sample, prov));
    res.artifacts.push_back(path("seed.json"));
  }
  if (opt.mask_report) {
    std::ostringstream os;
    os << "step,masked_fraction\n";
    for (const auto& [s, m] : masks) os << '"' << s << "\"," << m << '\n';
    write_text(path("mask_report.csv"), os.str());
    res.artifacts.push_back(path("mask_report.csv"));
  }
  return res;
}

}  // namespace dupin
