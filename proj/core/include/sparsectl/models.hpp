#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsectl/linops.hpp"
#include "sparsectl/synth.hpp"

namespace sparsectl::models {

// Grid-forming converter (3 states, 2 inputs); open loop unstable.
[[nodiscard]] Plant converter();

// Fully connected swing-equation network, one (theta, omega) pair per node.
struct GridOptions {
  std::size_t nodes = 1000;
  double dk = 0.2;
  std::uint64_t seed = 7;
  // Uniform coupling k_ij for j != i; defaults to 1 / (nodes - 1).
  std::optional<double> coupling;
  double b1 = 1.0;  // input weight on theta_i
  double b2 = 1.0;  // input weight on omega_i
};

// Every generated quantity, so that an instance can be replayed exactly.
struct GridParameters {
  double dk = 0.2;
  std::vector<double> inertia;  // m_i ~ U[0.5, 2.0)
  std::vector<double> damping;  // d_i ~ U[0.5, 1.0)
  Matrix coupling;              // k_ij, zero diagonal
  double b1 = 1.0;
  double b2 = 1.0;
};

[[nodiscard]] GridParameters sample_grid_parameters(const GridOptions& options);

// Block assembly: A_ii = [[1, dk], [-(k_i/m_i) dk, alpha_i]],
// A_ij = [[0, 0], [(k_ij/m_i) dk, alpha_i]] with alpha_i = 1 - (d_i/m_i) dk and
// k_i = sum_{j != i} k_ij. B is the 2n x 1 column [b1, b2, b1, b2, ...]^T.
[[nodiscard]] Plant assemble_power_grid(const GridParameters& params);

struct GeneratedGrid {
  Plant plant;
  GridParameters params;
};

[[nodiscard]] GeneratedGrid power_grid(const GridOptions& options);

// N coupled two-state subsystems: block-tridiagonal A, block-diagonal B.
[[nodiscard]] Plant interconnected_chain(std::size_t subsystems);

struct PlantFile {
  Plant plant;
  std::optional<Vector> weights;
};

// JSON plant file: {"n", "m", "A" (row-major n*n), "B" (row-major n*m),
// optional "name", optional "weights" (length n)}.
[[nodiscard]] PlantFile load_plant(const std::filesystem::path& path);
[[nodiscard]] PlantFile parse_plant(const std::string& text);
void save_plant(const std::filesystem::path& path, const Plant& plant,
                const std::optional<Vector>& weights = std::nullopt);

enum class ModelKind { kConverter, kGrid, kChain, kFile };

struct ModelSpec {
  ModelKind kind = ModelKind::kConverter;
  std::string source;                          // the URI or path as given
  std::map<std::string, std::string> params;   // builtin query parameters
  std::filesystem::path path;                  // kFile only
};

// Accepts builtin:converter, builtin:grid?nodes=..&dk=..&seed=..[&kij=..&b1=..&b2=..],
// builtin:chain?N=.., or a filesystem path.
[[nodiscard]] ModelSpec parse_model(const std::string& text);

struct ResolvedModel {
  ModelSpec spec;
  Plant plant;
  std::optional<Vector> weights;
  std::optional<GridParameters> grid;
  // Every parameter with its default materialized, for manifests.
  std::map<std::string, std::string> resolved_params;
};

[[nodiscard]] ResolvedModel resolve_model(const ModelSpec& spec);

// FNV-1a over (n, m, A bits, B bits); identifies the plant a plan belongs to.
[[nodiscard]] std::uint64_t plant_hash(const Plant& plant);
[[nodiscard]] std::string plant_hash_hex(const Plant& plant);

}  // namespace sparsectl::models
