#include "sparsectl/models.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "sparsectl/errors.hpp"
#include "sparsectl/rng.hpp"

namespace sparsectl::models {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

double entry_value(const json& value, const std::string& field, std::size_t row, std::size_t col) {
  auto location = [&] {
    return "field '" + field + "' entry at row " + std::to_string(row) + ", column " +
           std::to_string(col);
  };
  if (value.is_number()) {
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw LoadError(location() + " is not finite");
    return v;
  }
  if (value.is_null() || value.is_string()) {
    // JSON has no NaN/Infinity literals; writers commonly emit null or strings.
    throw LoadError(location() + " is not finite (" + value.dump() + ")");
  }
  throw LoadError(location() + " is not a number");
}

// Python's json module and several numeric writers emit bare NaN, Infinity
// and -Infinity. Quote them outside strings so the entry check can report
// where they are instead of failing the whole parse.
std::string quote_nonfinite_tokens(const std::string& text) {
  static constexpr std::string_view kTokens[] = {"-Infinity", "Infinity", "NaN"};
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    bool replaced = false;
    for (const std::string_view token : kTokens) {
      if (text.compare(i, token.size(), token) == 0) {
        out += '"';
        out += token;
        out += '"';
        i += token.size() - 1;
        replaced = true;
        break;
      }
    }
    if (!replaced) out += c;
  }
  return out;
}

std::size_t require_count(const json& doc, const char* key) {
  if (!doc.contains(key)) throw LoadError(std::string("missing field '") + key + "'");
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw LoadError(std::string("field '") + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

// Reads a row-major matrix given either flat or as an array of rows.
Matrix read_matrix(const json& doc, const std::string& field, std::size_t rows, std::size_t cols,
                   const std::string& dims) {
  if (!doc.contains(field)) throw LoadError("missing field '" + field + "'");
  const json& arr = doc.at(field);
  if (!arr.is_array()) throw LoadError("field '" + field + "' must be an array");
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const bool nested = !arr.empty() && arr.front().is_array();
  if (nested) {
    if (arr.size() != rows) {
      throw LoadError("field '" + field + "' has " + std::to_string(arr.size()) +
                      " rows, expected " + std::to_string(rows) + " (" + dims + ")");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const json& line = arr[r];
      if (!line.is_array() || line.size() != cols) {
        throw LoadError("field '" + field + "' row " + std::to_string(r) + " has " +
                        std::to_string(line.is_array() ? line.size() : 0) + " entries, expected " +
                        std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            entry_value(line[c], field, r, c);
      }
    }
    return M;
  }
  if (arr.size() != rows * cols) {
    throw LoadError("field '" + field + "' has " + std::to_string(arr.size()) +
                    " entries, expected " + dims + " = " + std::to_string(rows * cols));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          entry_value(arr[r * cols + c], field, r, c);
    }
  }
  return M;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const std::from_chars_result res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InvalidInput("model parameter '" + key + "' has invalid value '" + text + "'");
  }
  return value;
}

template <typename T>
T param_or(const ModelSpec& spec, const std::string& key, T fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : parse_number<T>(key, it->second);
}

void require_known_params(const ModelSpec& spec, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : spec.params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidInput("unknown model parameter '" + key + "' in " + spec.source);
  }
}

}  // namespace

Plant converter() {
  Matrix A(3, 3);
  A << 0, 0, 0.1017,
       0, 0, 0.025,
       0, 0, 2;
  Matrix B(3, 2);
  B << 1, 0.005,
       0, 1.5095,
       314.1593, 0;
  return Plant(std::move(A), std::move(B), "converter");
}

GridParameters sample_grid_parameters(const GridOptions& options) {
  if (options.nodes < 2) {
    throw InvalidInput("power grid needs at least 2 nodes");
  }
  if (!(options.dk > 0.0) || !std::isfinite(options.dk)) {
    throw InvalidInput("power grid sampling period dk must be positive");
  }
  const std::size_t nodes = options.nodes;
  const std::uint64_t seed = rng::derive_seed(options.seed, rng::domain::kModelParams);
  const rng::CounterStream inertia_stream(seed, 0);
  const rng::CounterStream damping_stream(seed, 1);

  GridParameters params;
  params.dk = options.dk;
  params.b1 = options.b1;
  params.b2 = options.b2;
  params.inertia.resize(nodes);
  params.damping.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    params.inertia[i] = 0.5 + 1.5 * rng::to_unit(inertia_stream.word(0, i));
    params.damping[i] = 0.5 + 0.5 * rng::to_unit(damping_stream.word(0, i));
  }
  const double k = options.coupling.value_or(1.0 / static_cast<double>(nodes - 1));
  const auto dim = static_cast<Eigen::Index>(nodes);
  params.coupling = Matrix::Constant(dim, dim, k);
  params.coupling.diagonal().setZero();
  return params;
}

Plant assemble_power_grid(const GridParameters& params) {
  const std::size_t nodes = params.inertia.size();
  if (nodes < 2 || params.damping.size() != nodes ||
      params.coupling.rows() != static_cast<Eigen::Index>(nodes) ||
      params.coupling.cols() != static_cast<Eigen::Index>(nodes)) {
    throw InvalidInput("inconsistent power grid parameters");
  }
  const auto n = static_cast<Eigen::Index>(2 * nodes);
  const double dk = params.dk;
  Matrix A = Matrix::Zero(n, n);
  Matrix B(n, 1);
  for (std::size_t i = 0; i < nodes; ++i) {
    const auto r = static_cast<Eigen::Index>(2 * i);
    const double m_i = params.inertia[i];
    const double alpha = 1.0 - params.damping[i] / m_i * dk;
    double k_i = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      if (j != i) k_i += params.coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto c = static_cast<Eigen::Index>(2 * j);
      if (i == j) {
        A(r, c) = 1.0;
        A(r, c + 1) = dk;
        A(r + 1, c) = -(k_i / m_i) * dk;
      } else {
        A(r + 1, c) =
            params.coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / m_i * dk;
      }
      A(r + 1, c + 1) = alpha;
    }
    B(r, 0) = params.b1;
    B(r + 1, 0) = params.b2;
  }
  return Plant(std::move(A), std::move(B), "grid");
}

GeneratedGrid power_grid(const GridOptions& options) {
  GridParameters params = sample_grid_parameters(options);
  Plant plant = assemble_power_grid(params);
  return {std::move(plant), std::move(params)};
}

Plant interconnected_chain(std::size_t subsystems) {
  if (subsystems < 1) {
    throw InvalidInput("interconnected chain needs at least one subsystem");
  }
  const auto N = static_cast<Eigen::Index>(subsystems);
  Matrix local(2, 2);
  local << 1.0, 0.890,
           0.890, 1.0;
  const Matrix coupling = 0.0890 * Matrix::Identity(2, 2);
  Matrix local_input(2, 1);
  local_input << 3.5600, 1.7800;

  Matrix A = Matrix::Zero(2 * N, 2 * N);
  Matrix B = Matrix::Zero(2 * N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    A.block(2 * i, 2 * i, 2, 2) = local;
    if (i + 1 < N) {
      A.block(2 * i, 2 * (i + 1), 2, 2) = coupling;
      A.block(2 * (i + 1), 2 * i, 2, 2) = coupling;
    }
    B.block(2 * i, i, 2, 1) = local_input;
  }
  return Plant(std::move(A), std::move(B), "chain");
}

PlantFile parse_plant(const std::string& text) {
  json doc;
  try {
    doc = json::parse(quote_nonfinite_tokens(text));
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("plant file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw LoadError("plant file must contain a JSON object");
  const std::size_t n = require_count(doc, "n");
  const std::size_t m = require_count(doc, "m");
  if (m > n) throw LoadError("field 'm' = " + std::to_string(m) + " exceeds n = " + std::to_string(n));
  Matrix A = read_matrix(doc, "A", n, n, "n*n");
  Matrix B = read_matrix(doc, "B", n, m, "n*m");
  std::string name;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) throw LoadError("field 'name' must be a string");
    name = doc.at("name").get<std::string>();
  }
  std::optional<Vector> weights;
  if (doc.contains("weights") && !doc.at("weights").is_null()) {
    const Matrix w = read_matrix(doc, "weights", n, 1, "n");
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      if (!(w(i, 0) > 0.0)) {
        throw LoadError("field 'weights' entry " + std::to_string(i) + " must be positive");
      }
    }
    weights = w.col(0);
  }
  try {
    return {Plant(std::move(A), std::move(B), std::move(name)), std::move(weights)};
  } catch (const InvalidInput& e) {
    throw LoadError(e.what());
  }
}

PlantFile load_plant(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open plant file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_plant(buffer.str());
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void save_plant(const std::filesystem::path& path, const Plant& plant,
                const std::optional<Vector>& weights) {
  json doc;
  doc["n"] = plant.n();
  doc["m"] = plant.m();
  if (!plant.name().empty()) doc["name"] = plant.name();
  std::vector<double> a, b;
  a.reserve(static_cast<std::size_t>(plant.A().size()));
  for (Eigen::Index r = 0; r < plant.n(); ++r)
    for (Eigen::Index c = 0; c < plant.n(); ++c) a.push_back(plant.A()(r, c));
  for (Eigen::Index r = 0; r < plant.n(); ++r)
    for (Eigen::Index c = 0; c < plant.m(); ++c) b.push_back(plant.B()(r, c));
  doc["A"] = a;
  doc["B"] = b;
  if (weights) doc["weights"] = std::vector<double>(weights->data(), weights->data() + weights->size());
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write plant file '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw LoadError("failed writing plant file '" + path.string() + "'");
}

ModelSpec parse_model(const std::string& text) {
  constexpr std::string_view kPrefix = "builtin:";
  ModelSpec spec;
  spec.source = text;
  if (text.rfind(kPrefix, 0) != 0) {
    if (text.empty()) throw InvalidInput("empty model specification");
    spec.kind = ModelKind::kFile;
    spec.path = text;
    return spec;
  }
  const std::string rest = text.substr(kPrefix.size());
  const auto q = rest.find('?');
  const std::string name = rest.substr(0, q);
  if (name == "converter") {
    spec.kind = ModelKind::kConverter;
  } else if (name == "grid") {
    spec.kind = ModelKind::kGrid;
  } else if (name == "chain") {
    spec.kind = ModelKind::kChain;
  } else {
    throw InvalidInput("unknown builtin model '" + name + "'");
  }
  if (q != std::string::npos) {
    std::stringstream query(rest.substr(q + 1));
    std::string item;
    while (std::getline(query, item, '&')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw InvalidInput("malformed model parameter '" + item + "' in " + text);
      }
      spec.params[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  return spec;
}

ResolvedModel resolve_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::kConverter: {
      require_known_params(spec, {});
      return {spec, converter(), std::nullopt, std::nullopt, {}};
    }
    case ModelKind::kChain: {
      require_known_params(spec, {"N"});
      const auto N = param_or<std::size_t>(spec, "N", 20);
      return {spec, interconnected_chain(N), std::nullopt, std::nullopt, {{"N", std::to_string(N)}}};
    }
    case ModelKind::kGrid: {
      require_known_params(spec, {"nodes", "dk", "seed", "kij", "b1", "b2"});
      GridOptions options;
      options.nodes = param_or<std::size_t>(spec, "nodes", options.nodes);
      options.dk = param_or<double>(spec, "dk", options.dk);
      options.seed = param_or<std::uint64_t>(spec, "seed", options.seed);
      if (spec.params.count("kij")) options.coupling = param_or<double>(spec, "kij", 0.0);
      options.b1 = param_or<double>(spec, "b1", options.b1);
      options.b2 = param_or<double>(spec, "b2", options.b2);
      GeneratedGrid grid = power_grid(options);
      std::map<std::string, std::string> resolved{
          {"nodes", std::to_string(options.nodes)},
          {"dk", format_double(options.dk)},
          {"seed", std::to_string(options.seed)},
          {"kij", options.coupling ? format_double(*options.coupling) : "1/(nodes-1)"},
          {"b1", format_double(options.b1)},
          {"b2", format_double(options.b2)},
      };
      return {spec, std::move(grid.plant), std::nullopt, std::move(grid.params), std::move(resolved)};
    }
    case ModelKind::kFile: {
      PlantFile file = load_plant(spec.path);
      return {spec, std::move(file.plant), std::move(file.weights), std::nullopt,
              {{"path", spec.path.string()}}};
    }
  }
  throw InvalidInput("unresolvable model");
}

std::uint64_t plant_hash(const Plant& plant) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) { mix_bytes(&v, sizeof v); };
  auto mix_matrix = [&](const Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) {
        std::uint64_t bits;
        const double v = M(r, c) == 0.0 ? 0.0 : M(r, c);  // fold -0.0
        std::memcpy(&bits, &v, sizeof bits);
        mix_u64(bits);
      }
    }
  };
  mix_u64(static_cast<std::uint64_t>(plant.n()));
  mix_u64(static_cast<std::uint64_t>(plant.m()));
  mix_matrix(plant.A());
  mix_matrix(plant.B());
  return h;
}

std::string plant_hash_hex(const Plant& plant) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << plant_hash(plant);
  return out.str();
}

}  // namespace sparsectl::models
