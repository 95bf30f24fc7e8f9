#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stacked/asymptotics.hpp"
#include "stacked/configuration.hpp"
#include "stacked/hecke.hpp"
#include "stacked/immersion.hpp"
#include "stacked/surface_solver.hpp"

namespace stacked {

using Json = nlohmann::json;

/// Raised when a document does not match the expected schema.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

/// Complex numbers are [re, im].
Json to_json(cplx z);
cplx complex_from_json(const Json& j);

/// {"tau": [re, im], "window": [[re, im], ...], "left_tail": [...], "right_tail": [...]}
Json to_json(const Configuration& cfg);
Configuration configuration_from_json(const Json& j);

Json to_json(const BalanceReport& rep);
Json to_json(const NondegeneracyReport& rep);
Json to_json(const SolutionSet& set);

Json to_json(const TorusParams& p);
TorusParams torus_params_from_json(const Json& j);
Json to_json(const GluingState& st);
/// Accepts a bare state or a document with a "state" member.
GluingState gluing_state_from_json(const Json& j);
Json to_json(const SolveReport& rep);

Json to_json(const std::vector<SpacingRow>& rows);
Json to_json(const EmbeddednessReport& rep);
/// Frames, layer and neck summaries, per-vertex tags and the diagnostics of an exported mesh.
Json mesh_sidecar(const SurfaceMesh& mesh, int copies, const std::vector<SpacingRow>& spacing,
                  const EmbeddednessReport& diagnostics);

Json to_json(const DecayReport& rep);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

/// CSV with header "k,d,w".
std::string decay_csv(const DecayReport& rep);

/// ASCII OBJ of copies x copies lattice translates of the mesh (horizontal coordinates unwrapped).
std::string mesh_obj(const SurfaceMesh& mesh, int copies);

/// Parses JSON text; SchemaError on malformed input.
Json parse_json(const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory followed by a rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace stacked
