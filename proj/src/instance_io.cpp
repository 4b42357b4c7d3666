#include "qprecon/instance_io.hpp"

#include "qprecon/matrix_io.hpp"

#include <json.hpp>

#include <fstream>

namespace qprecon::io {

namespace {

using nlohmann::json;

std::uint64_t fnv1a_file(const std::filesystem::path& path, std::uint64_t hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot hash missing file: " + path.string());
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001B3ULL;
    }
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> data_files(const json& manifest) {
  std::vector<std::string> files;
  for (const auto& [key, value] : manifest.at("files").items()) files.push_back(value);
  return files;
}

std::string compute_hash(const std::filesystem::path& dir, const json& manifest) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& f : data_files(manifest)) h = fnv1a_file(dir / f, h);
  return hex64(h);
}

}  // namespace

void save_instance(const std::filesystem::path& dir, const problems::ProblemInstance& inst,
                   const GeneratorSpec& spec) {
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["format"] = "qprecon-instance-v1";
  manifest["m"] = inst.m;
  manifest["n"] = inst.n;
  manifest["k"] = inst.k;
  manifest["seed"] = spec.seed;
  manifest["model"] = spec.model == Model::ZeroMatrix ? "zero" : "gaussian_factors";

  json files;
  write_dense_csv(dir / "mstar_G.csv", inst.mstar.G);
  write_dense_csv(dir / "mstar_H.csv", inst.mstar.H);
  files["mstar_g"] = "mstar_G.csv";
  files["mstar_h"] = "mstar_H.csv";

  if (std::holds_alternative<problems::FullObservation>(inst.op)) {
    manifest["sampling"] = {{"type", "full"}};
  } else if (const auto* es = std::get_if<problems::EntrySampling>(&inst.op)) {
    manifest["sampling"] = {{"type", "bernoulli"}, {"p", es->rate}};
    write_matrix_market(dir / "omega.mtx", std::get<SparseCoord>(inst.observed));
    files["omega"] = "omega.mtx";
  } else {
    const auto& gs = std::get<problems::GaussianSensing>(inst.op);
    manifest["sampling"] = {{"type", "gaussian"}, {"d", gs.d()}};
    write_dense_binary(dir / "phi.bin", gs.phi);
    write_dense_csv(dir / "bstar.csv", std::get<Vector>(inst.observed));
    files["phi"] = "phi.bin";
    files["bstar"] = "bstar.csv";
  }
  manifest["files"] = files;
  manifest["data_hash"] = compute_hash(dir, manifest);

  std::ofstream out(dir / "manifest.json");
  if (!out) throw ParseError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

problems::ProblemInstance load_instance(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError("missing manifest.json in " + dir.string());
  json manifest = json::parse(in);
  if (manifest.value("format", "") != "qprecon-instance-v1")
    throw ParseError(dir.string() + ": unknown instance format");

  FactoredPoint mstar;
  mstar.G = read_dense_csv(dir / manifest["files"].at("mstar_g").get<std::string>());
  mstar.H = read_dense_csv(dir / manifest["files"].at("mstar_h").get<std::string>());
  const int m = manifest.at("m").get<int>();
  const int n = manifest.at("n").get<int>();
  if (mstar.rows() != m || mstar.cols() != n)
    throw ParseError(dir.string() + ": factor files do not match manifest dimensions");

  const std::string type = manifest.at("sampling").at("type").get<std::string>();
  if (type == "full") return problems::make_full_observation(std::move(mstar));
  if (type == "bernoulli") {
    const SparseCoord omega =
        read_matrix_market(dir / manifest["files"].at("omega").get<std::string>());
    // Rebuild from the pattern; observed values are re-derived from the
    // factors, which keeps the instance consistent by construction.
    return problems::make_entry_sampling(std::move(mstar), omega);
  }
  if (type == "gaussian") {
    Matrix phi = read_dense_binary(dir / manifest["files"].at("phi").get<std::string>());
    return problems::make_gaussian_sensing(std::move(mstar), std::move(phi));
  }
  throw ParseError(dir.string() + ": unknown sampling type '" + type + "'");
}

std::string instance_data_hash(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError("missing manifest.json in " + dir.string());
  const json manifest = json::parse(in);
  return manifest.at("data_hash").get<std::string>();
}

}  // namespace qprecon::io
