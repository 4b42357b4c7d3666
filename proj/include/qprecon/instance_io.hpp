#pragma once

#include "qprecon/generate.hpp"
#include "qprecon/problems.hpp"

#include <filesystem>
#include <string>

namespace qprecon::io {

/// Write an instance directory: ground-truth factors (CSV), observations
/// (Matrix Market for entry sampling, binary sensing block + CSV vector for
/// sensing) and a manifest.json carrying dimensions, sampling, seed and an
/// FNV-1a hash of the data files.
void save_instance(const std::filesystem::path& dir, const problems::ProblemInstance& inst,
                   const GeneratorSpec& spec);

problems::ProblemInstance load_instance(const std::filesystem::path& dir);

/// The manifest's data hash (for reproducibility checks).
std::string instance_data_hash(const std::filesystem::path& dir);

}  // namespace qprecon::io
