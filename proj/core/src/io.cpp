#include "dupin/io.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dupin/errors.hpp"

namespace dupin {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from(const json& j) {
  const auto x = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
}

json grid_json(const Grid& g) {
  return {{"counts", g.counts()}, {"spacing", g.spacings()}, {"origin", g.origins()}};
}

Grid grid_from(const json& j) {
  return Grid(j.at("counts").get<std::vector<int>>(), j.at("spacing").get<std::vector<double>>(),
              j.at("origin").get<std::vector<double>>());
}

json scalar_json(const ScalarField& f) {
  json j = {{"tag", f.tag}, {"values", f.values}};
  if (!f.mask.empty()) j["mask"] = f.mask;
  return j;
}

ScalarField scalar_from(const json& j, const Grid& g) {
  ScalarField f(g, 0.0, j.value("tag", std::string{}));
  f.values = j.at("values").get<std::vector<double>>();
  if (f.values.size() != g.size()) fail(ErrorCode::GridMismatch, "field size differs from grid");
  if (j.contains("mask")) f.mask = j.at("mask").get<std::vector<std::uint8_t>>();
  return f;
}

// Vector fields are stored flat, node-major.
json vector_json(const VectorField& f) {
  std::vector<double> flat;
  for (const auto& v : f.values) flat.insert(flat.end(), v.data(), v.data() + v.size());
  json j = {{"tag", f.tag}, {"dim", f.values.empty() ? 0 : f.values[0].size()}, {"values", flat}};
  if (!f.mask.empty()) j["mask"] = f.mask;
  return j;
}

VectorField vector_from(const json& j, const Grid& g) {
  const int d = j.at("dim").get<int>();
  const auto flat = j.at("values").get<std::vector<double>>();
  if (flat.size() != g.size() * static_cast<std::size_t>(d)) fail(ErrorCode::GridMismatch, "field size differs");
  VectorField f(g, Vec::Zero(d), j.value("tag", std::string{}));
  for (std::size_t p = 0; p < g.size(); ++p) f.values[p] = Eigen::Map<const Vec>(&flat[p * d], d);
  if (j.contains("mask")) f.mask = j.at("mask").get<std::vector<std::uint8_t>>();
  return f;
}

template <class F, class T>
json list_json(const std::vector<T>& v, F fn) {
  json a = json::array();
  for (const auto& x : v) a.push_back(fn(x));
  return a;
}

json prov_json(const Provenance& p) { return {{"spec_hash", p.spec_hash}, {"chain", p.chain}}; }

std::string comment_block(const Provenance& p, const char* lead) {
  std::ostringstream os;
  if (!p.spec_hash.empty()) os << lead << " spec_hash " << p.spec_hash << "\n";
  for (const auto& c : p.chain) os << lead << " chain " << c << "\n";
  return os.str();
}

struct SliceNodes {
  int na = 0, nb = 0;
  std::vector<std::size_t> nodes;  // row-major over (a, b)
};

SliceNodes slice_nodes(const Grid& g, const MeshSlice& sl) {
  const int d = g.dims();
  if (d < 2) fail(ErrorCode::UnsupportedSlice, "mesh export needs a grid with at least two axes");
  if (sl.a == sl.b || sl.a < 0 || sl.b < 0 || sl.a >= d || sl.b >= d)
    fail(ErrorCode::UnsupportedSlice, "slice axes must be two distinct grid axes");
  std::vector<int> idx(d);
  for (int k = 0; k < d; ++k) idx[k] = g.count(k) / 2;
  if (!sl.fixed.empty()) {
    if (static_cast<int>(sl.fixed.size()) != d) fail(ErrorCode::UnsupportedSlice, "fixed index per axis required");
    for (int k = 0; k < d; ++k) {
      if (k == sl.a || k == sl.b) continue;
      if (sl.fixed[k] < 0 || sl.fixed[k] >= g.count(k)) fail(ErrorCode::UnsupportedSlice, "fixed index out of range");
      idx[k] = sl.fixed[k];
    }
  }
  SliceNodes out;
  out.na = g.count(sl.a);
  out.nb = g.count(sl.b);
  for (int i = 0; i < out.na; ++i)
    for (int j = 0; j < out.nb; ++j) {
      idx[sl.a] = i;
      idx[sl.b] = j;
      out.nodes.push_back(g.index(idx));
    }
  return out;
}

Eigen::Vector3d xyz(const Vec& v) {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int k = 0; k < std::min<int>(3, static_cast<int>(v.size())); ++k) x[k] = v[k];
  return x;
}

std::vector<std::array<std::size_t, 4>> quads(const ImmersionSample& s, const SliceNodes& sn) {
  std::vector<std::array<std::size_t, 4>> q;
  for (int i = 0; i + 1 < sn.na; ++i)
    for (int j = 0; j + 1 < sn.nb; ++j) {
      const std::size_t a = static_cast<std::size_t>(i) * sn.nb + j;
      const std::array<std::size_t, 4> c{a, a + sn.nb, a + sn.nb + 1, a + 1};
      bool m = false;
      for (auto k : c) m = m || s.masked(sn.nodes[k]);
      if (!m) q.push_back(c);
    }
  return q;
}

}  // namespace

std::string sample_to_json(const ImmersionSample& s, const Provenance& prov) {
  json j;
  j["schema"] = kSampleSchema;
  j["provenance"] = prov_json(prov);
  j["grid"] = grid_json(s.grid);
  j["ambient"] = s.ambient;
  j["pos"] = vector_json(s.pos);
  j["X"] = list_json(s.X, vector_json);
  j["xi"] = list_json(s.xi, vector_json);
  j["lame"] = list_json(s.lame, scalar_json);
  j["kappa"] = list_json(s.kappa, scalar_json);
  if (s.triple) {
    const Triple& t = *s.triple;
    j["triple"] = {{"cmap", t.cmap.cls},
                   {"normals", t.normals},
                   {"v", list_json(t.v, scalar_json)},
                   {"h", list_json(t.h, scalar_json)},
                   {"V", list_json(t.V, scalar_json)}};
  }
  return j.dump(1);
}

ImmersionSample sample_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("sample JSON: ") + e.what());
  }
  if (j.value("schema", std::string{}) != kSampleSchema) fail(ErrorCode::ParseError, "unknown sample schema");
  try {
    ImmersionSample s;
    s.grid = grid_from(j.at("grid"));
    s.ambient = j.at("ambient").get<int>();
    s.pos = vector_from(j.at("pos"), s.grid);
    for (const auto& x : j.at("X")) s.X.push_back(vector_from(x, s.grid));
    for (const auto& x : j.at("xi")) s.xi.push_back(vector_from(x, s.grid));
    for (const auto& x : j.at("lame")) s.lame.push_back(scalar_from(x, s.grid));
    for (const auto& x : j.at("kappa")) s.kappa.push_back(scalar_from(x, s.grid));
    if (j.contains("triple")) {
      const auto& tj = j.at("triple");
      ClassMap cm;
      cm.cls = tj.at("cmap").get<std::vector<int>>();
      Triple t = Triple::zeros(s.grid, cm, tj.at("normals").get<int>());
      t.v.clear();
      t.h.clear();
      t.V.clear();
      for (const auto& x : tj.at("v")) t.v.push_back(scalar_from(x, s.grid));
      for (const auto& x : tj.at("h")) t.h.push_back(scalar_from(x, s.grid));
      for (const auto& x : tj.at("V")) t.V.push_back(scalar_from(x, s.grid));
      s.triple = std::move(t);
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("sample JSON: ") + e.what());
  }
}

std::string sample_csv(const ImmersionSample& s, const Provenance& prov) {
  std::ostringstream os;
  os.precision(17);
  os << comment_block(prov, "#");
  os << "node";
  for (int a = 0; a < s.grid.dims(); ++a) os << ",u" << a;
  for (int k = 0; k < s.ambient; ++k) os << ",x" << k;
  os << ",masked\n";
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    os << p;
    for (double u : s.grid.point(p)) os << ',' << u;
    for (int k = 0; k < s.ambient; ++k) os << ',' << s.pos.values[p][k];
    os << ',' << (s.masked(p) ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string sample_obj(const ImmersionSample& s, const MeshSlice& slice, const Provenance& prov) {
  const SliceNodes sn = slice_nodes(s.grid, slice);
  std::ostringstream os;
  os.precision(17);
  os << comment_block(prov, "#");
  for (auto p : sn.nodes) {
    const auto x = xyz(s.pos.values[p]);
    os << "v " << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  }
  for (const auto& q : quads(s, sn)) os << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  return os.str();
}

std::string sample_ply(const ImmersionSample& s, const MeshSlice& slice, const Provenance& prov) {
  const SliceNodes sn = slice_nodes(s.grid, slice);
  const auto q = quads(s, sn);
  std::ostringstream os;
  os.precision(17);
  os << "ply\nformat ascii 1.0\n" << comment_block(prov, "comment");
  os << "element vertex " << sn.nodes.size() << "\nproperty double x\nproperty double y\nproperty double z\n";
  os << "element face " << q.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (auto p : sn.nodes) {
    const auto x = xyz(s.pos.values[p]);
    os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  }
  for (const auto& c : q) os << "4 " << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  return os.str();
}

void export_sample(const ImmersionSample& s, const std::string& format, const std::string& path,
                   const MeshSlice& slice, const Provenance& prov) {
  if (format == "obj")
    write_text(path, sample_obj(s, slice, prov));
  else if (format == "ply")
    write_text(path, sample_ply(s, slice, prov));
  else if (format == "csv")
    write_text(path, sample_csv(s, prov));
  else if (format == "json")
    write_text(path, sample_to_json(s, prov));
  else
    fail(ErrorCode::InvalidArgument, "unknown export format '" + format + "'");
}

std::string report_json(const DiagnosticsReport& r, const Provenance& prov) {
  json c = json::array();
  for (const auto& v : r.conullity)
    c.push_back({{"integrable", v.integrable}, {"trivial", v.trivial}, {"sufficient", v.sufficient},
                 {"residual", v.residual}});
  json j = {{"provenance", prov_json(prov)},
            {"k", r.k},
            {"multiplicities", r.multiplicities},
            {"proper", r.proper},
            {"dupin", r.dupin},
            {"flat_normal", r.flat_normal},
            {"conullity", c},
            {"leaf_sphere", r.leaf_sphere},
            {"leaf_center", r.leaf_center},
            {"dim_N1", r.dim_N1},
            {"dim_Sf", r.dim_Sf},
            {"c", r.c},
            {"holonomic", r.holonomic},
            {"masked_fraction", r.masked_fraction},
            {"transition_nodes", r.transition_nodes},
            {"N1_spectrum", vec_json(r.N1_spectrum)},
            {"Sf_spectrum", vec_json(r.Sf_spectrum)},
            {"bound_ok", r.bound_ok},
            {"holonomic_consistent", r.holonomic_consistent},
            {"weak_bound", r.weak_bound}};
  return j.dump(1);
}

std::string residual_json(const ResidualReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"id", row.id}, {"max_residual", row.max_residual}, {"masked_fraction", row.masked_fraction}});
  return json{{"pass", r.pass}, {"rows", rows}}.dump(1);
}

namespace {

json transform_json(const LTransform& T) {
  json j = {{"kind", to_string(T.kind)}};
  switch (T.kind) {
    case LTransform::Kind::Translate: j["u"] = vec_json(T.u); break;
    case LTransform::Kind::Orthogonal: {
      json rows = json::array();
      for (int r = 0; r < T.O.rows(); ++r) rows.push_back(vec_json(T.O.row(r).transpose()));
      j["O"] = rows;
      break;
    }
    case LTransform::Kind::Homothety: j["k"] = T.k; break;
    case LTransform::Kind::ParallelTranslate: j["c"] = T.c; break;
    case LTransform::Kind::Inversion: break;
  }
  return j;
}

}  // namespace

std::string chain_json(const std::vector<LTransform>& chain) {
  json a = json::array();
  for (const auto& T : chain) a.push_back(transform_json(T));
  return a.dump(1);
}

std::vector<LTransform> chain_from_json(const std::string& text) {
  std::vector<LTransform> out;
  try {
    for (const auto& j : json::parse(text)) {
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "translate") {
        out.push_back(LTransform::translate(vec_from(j.at("u"))));
      } else if (kind == "orthogonal") {
        const auto& rows = j.at("O");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Mat O(n, n);
        for (Eigen::Index r = 0; r < n; ++r) O.row(r) = vec_from(rows[r]).transpose();
        out.push_back(LTransform::orthogonal(O));
      } else if (kind == "homothety") {
        out.push_back(LTransform::homothety(j.at("k").get<double>()));
      } else if (kind == "inversion") {
        out.push_back(LTransform::inversion());
      } else if (kind == "parallel") {
        out.push_back(LTransform::parallel(j.at("c").get<std::vector<double>>()));
      } else {
        fail(ErrorCode::ParseError, "unknown transform kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("transform chain: ") + e.what());
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << content;
}

}  // namespace dupin
