#pragma once

#include <string>
#include <vector>

#include "dupin/moebius.hpp"
#include "dupin/net.hpp"
#include "dupin/verify.hpp"

namespace dupin {

inline constexpr const char* kSampleSchema = "dupin.sample/1";

struct Provenance {
  std::string spec_hash;
  std::vector<std::string> chain;
};

std::string sample_to_json(const ImmersionSample& s, const Provenance& prov = {});
ImmersionSample sample_from_json(const std::string& text);

// Header row then one node per row: node, grid coordinates, position, mask.
std::string sample_csv(const ImmersionSample& s, const Provenance& prov = {});

// Two grid axes spanning the mesh; the other axes are held at `fixed` (middle node when empty).
struct MeshSlice {
  int a = 0, b = 1;
  std::vector<int> fixed;
};
// Quad meshes of a 2D slice. Vertices are the first three ambient coordinates (zero padded);
// cells touching a masked node are omitted.
std::string sample_obj(const ImmersionSample& s, const MeshSlice& slice = {}, const Provenance& prov = {});
std::string sample_ply(const ImmersionSample& s, const MeshSlice& slice = {}, const Provenance& prov = {});

// format: obj | ply | csv | json
void export_sample(const ImmersionSample& s, const std::string& format, const std::string& path,
                   const MeshSlice& slice = {}, const Provenance& prov = {});

std::string report_json(const DiagnosticsReport& r, const Provenance& prov = {});
std::string residual_json(const ResidualReport& r);

std::string chain_json(const std::vector<LTransform>& chain);
std::vector<LTransform> chain_from_json(const std::string& text);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

}  // namespace dupin
