#include "bqlearn/bench.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>

namespace bqlearn::bench {
namespace {

// Reads keys off a JSON object and rejects any key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw Error(where_ + ": expected an object");
  }

  bool has(const std::string& key) const {
    return object_.contains(key) && !object_.at(key).is_null();
  }

  void mark(const std::string& key) { seen_.insert(key); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!object_.contains(key)) throw Error(where_ + ": missing key '" + key + "'");
    return object_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return object_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return get<T>(key, T{});
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw Error(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(where + ": ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  check_noise_matrix(m);
  return m;
}

Json matrix_to_json(const Matrix& m) {
  if (m.size() == 0) return nullptr;
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void check_probability(double v, const std::string& what, bool allow_one) {
  if (!(v >= 0.0 && (allow_one ? v <= 1.0 : v < 1.0))) {
    throw Error(what + (allow_one ? " must be in [0, 1]" : " must be in [0, 1)"));
  }
}

CorruptionSpec parse_corruption(const Json& j) {
  ObjectReader r(j, "corruption");
  const std::string type = r.get<std::string>("type", "none");
  CorruptionSpec out;
  if (type == "none") {
    out = corruption::None{};
  } else if (type == "label_noise") {
    corruption::LabelNoise c;
    if (r.has("noise_matrix") == r.has("noise_ratio")) {
      throw Error("corruption label_noise: give exactly one of noise_matrix / noise_ratio");
    }
    if (r.has("noise_matrix")) c.noise_matrix = matrix_from_json(r.at("noise_matrix"), "noise_matrix");
    c.noise_ratio = r.get<double>("noise_ratio", 0.0);
    check_probability(c.noise_ratio, "noise_ratio", true);
    out = c;
  } else if (type == "instance_dependent") {
    corruption::InstanceDependent c;
    c.flip_probability = r.get<double>("flip_probability", 0.0);
    check_probability(c.flip_probability, "flip_probability", true);
    if (r.has("noise_matrix")) c.noise_matrix = matrix_from_json(r.at("noise_matrix"), "noise_matrix");
    r.mark("noise_matrix");
    out = c;
  } else if (type == "uncertainty") {
    corruption::Uncertainty c;
    c.target_ratio = r.get<double>("target_ratio", 0.0);
    check_probability(c.target_ratio, "target_ratio", false);
    c.l2_penalty = r.get<double>("l2_penalty", 1.0);
    if (r.has("noise_matrix")) c.noise_matrix = matrix_from_json(r.at("noise_matrix"), "noise_matrix");
    r.mark("noise_matrix");
    out = c;
  } else if (type == "feature_dependent") {
    corruption::FeatureDependent c;
    c.noise_ratio = r.get<double>("noise_ratio", 0.0);
    check_probability(c.noise_ratio, "noise_ratio", false);
    c.flip_sd = r.get<double>("flip_sd", 0.1);
    if (!(c.flip_sd >= 0.0)) throw Error("flip_sd must be non-negative");
    out = c;
  } else if (type == "weak_labels") {
    corruption::WeakLabels c;
    c.l2_penalty = r.get<double>("l2_penalty", 1.0);
    out = c;
  } else if (type == "imbalance") {
    corruption::Imbalance c;
    c.target = r.get<std::vector<double>>("target", {});
    if (c.target.empty()) throw Error("corruption imbalance: target distribution required");
    const std::string mode = r.get<std::string>("mode", "undersample");
    if (mode == "undersample") {
      c.mode = ImbalanceMode::kUndersample;
    } else if (mode == "oversample") {
      c.mode = ImbalanceMode::kOversample;
    } else {
      throw Error("corruption imbalance: mode must be undersample or oversample");
    }
    out = c;
  } else if (type == "sampling_bias") {
    corruption::SamplingBias c;
    c.shift = r.get<double>("shift", 0.0);
    c.scale = r.get<double>("scale", 1.0);
    c.target_fraction = r.get<double>("target_fraction", 0.5);
    if (!(c.scale > 0.0)) throw Error("sampling_bias: scale must be positive");
    if (!(c.target_fraction > 0.0 && c.target_fraction <= 1.0)) {
      throw Error("sampling_bias: target_fraction must be in (0, 1]");
    }
    out = c;
  } else {
    throw Error("unknown corruption type: " + type);
  }
  r.finish();
  return out;
}

Json corruption_to_json(const CorruptionSpec& spec) {
  return std::visit(
      [](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, corruption::None>) {
          return {{"type", "none"}};
        } else if constexpr (std::is_same_v<T, corruption::LabelNoise>) {
          if (c.noise_matrix.size() > 0) {
            return {{"type", "label_noise"}, {"noise_matrix", matrix_to_json(c.noise_matrix)}};
          }
          return {{"type", "label_noise"}, {"noise_ratio", c.noise_ratio}};
        } else if constexpr (std::is_same_v<T, corruption::InstanceDependent>) {
          return {{"type", "instance_dependent"},
                  {"flip_probability", c.flip_probability},
                  {"noise_matrix", matrix_to_json(c.noise_matrix)}};
        } else if constexpr (std::is_same_v<T, corruption::Uncertainty>) {
          return {{"type", "uncertainty"},
                  {"target_ratio", c.target_ratio},
                  {"l2_penalty", c.l2_penalty},
                  {"noise_matrix", matrix_to_json(c.noise_matrix)}};
        } else if constexpr (std::is_same_v<T, corruption::FeatureDependent>) {
          return {{"type", "feature_dependent"}, {"noise_ratio", c.noise_ratio}, {"flip_sd", c.flip_sd}};
        } else if constexpr (std::is_same_v<T, corruption::WeakLabels>) {
          return {{"type", "weak_labels"}, {"l2_penalty", c.l2_penalty}};
        } else if constexpr (std::is_same_v<T, corruption::Imbalance>) {
          return {{"type", "imbalance"},
                  {"target", c.target},
                  {"mode", c.mode == ImbalanceMode::kUndersample ? "undersample" : "oversample"}};
        } else {
          return {{"type", "sampling_bias"},
                  {"shift", c.shift},
                  {"scale", c.scale},
                  {"target_fraction", c.target_fraction}};
        }
      },
      spec);
}

// Default hyperparameters per algorithm; anything else in `params` is an error.
Json default_params(Algorithm algorithm) {
  Json p = Json::object();
  if (algorithm == Algorithm::kUnhinged) {
    p["kernel"] = "linear";
    p["gamma"] = nullptr;
    p["degree"] = 3;
    p["coef0"] = 1.0;
    p["reg"] = 1.0;
    return p;
  }
  p["l2_penalty"] = 1.0;
  p["max_iter"] = 1000;
  p["tol"] = 1e-6;
  switch (algorithm) {
    case Algorithm::kKkmm:
      p["kernel"] = "rbf";
      p["gamma"] = nullptr;
      p["degree"] = 3;
      p["coef0"] = 1.0;
      p["bound"] = 1000.0;
      p["mean_slack"] = nullptr;
      p["permissive"] = false;
      break;
    case Algorithm::kIrlnl:
    case Algorithm::kIrbl:
    case Algorithm::kKpdr:
      p["w_max"] = 1000.0;
      break;
    case Algorithm::kBackward:
      p["clip_negative"] = false;
      break;
    case Algorithm::kTrAdaBoost:
      p["n_iter"] = 10;
      break;
    default:
      break;
  }
  return p;
}

KernelSpec kernel_from_params(const Json& p) {
  KernelSpec k;
  k.family = kernel_family_from_name(p.at("kernel").get<std::string>());
  if (!p.at("gamma").is_null()) k.gamma = p.at("gamma").get<double>();
  k.degree = p.at("degree").get<int>();
  k.coef0 = p.at("coef0").get<double>();
  return k;
}

AlgorithmOptions options_from_params(Algorithm algorithm, const Json& p) {
  AlgorithmOptions o;
  try {
    if (algorithm == Algorithm::kUnhinged) {
      o.unhinged_kernel = kernel_from_params(p);
      o.unhinged_reg = p.at("reg").get<double>();
      if (!(o.unhinged_reg > 0.0)) throw Error("unhinged: reg must be positive");
      return o;
    }
    o.learner.l2_penalty = p.at("l2_penalty").get<double>();
    o.learner.max_iter = p.at("max_iter").get<int>();
    o.learner.tol = p.at("tol").get<double>();
    if (p.contains("w_max")) o.w_max = p.at("w_max").get<double>();
    if (p.contains("clip_negative")) o.clip_negative = p.at("clip_negative").get<bool>();
    if (p.contains("n_iter")) o.n_iter = p.at("n_iter").get<int>();
    if (algorithm == Algorithm::kKkmm) {
      o.kmm_kernel = kernel_from_params(p);
      o.kmm_bound = p.at("bound").get<double>();
      o.kmm_mean_slack = p.at("mean_slack").is_null() ? -1.0 : p.at("mean_slack").get<double>();
      o.kmm_permissive = p.at("permissive").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("algorithm " + algorithm_name(algorithm) + ": bad parameter type (" + e.what() + ")");
  }
  return o;
}

std::string scalar_text(const Json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<AlgorithmSpec> parse_algorithm(const Json& entry) {
  Json name_json;
  Json given = Json::object();
  std::optional<std::string> label;
  if (entry.is_string()) {
    name_json = entry;
  } else {
    ObjectReader r(entry, "algorithm entry");
    name_json = r.at("name");
    given = r.get<Json>("params", Json::object());
    label = r.optional<std::string>("label");
    r.finish();
  }
  if (!name_json.is_string()) throw Error("algorithm entry: name must be a string");
  const std::string name = name_json.get<std::string>();
  const Algorithm algorithm = algorithm_from_name(name);
  if (!given.is_object()) throw Error("algorithm " + name + ": params must be an object");

  const Json defaults = default_params(algorithm);
  std::vector<std::string> grid_keys;
  for (const auto& [key, value] : given.items()) {
    if (!defaults.contains(key)) throw Error("algorithm " + name + ": unknown parameter '" + key + "'");
    if (value.is_array()) {
      if (value.empty()) throw Error("algorithm " + name + ": empty grid for '" + key + "'");
      grid_keys.push_back(key);
    }
  }

  if (label && !grid_keys.empty()) throw Error("algorithm " + name + ": a grid entry cannot set a label");

  // Cartesian product over grid keys, last key varying fastest.
  std::vector<AlgorithmSpec> out;
  std::vector<std::size_t> pos(grid_keys.size(), 0);
  while (true) {
    Json params = defaults;
    std::string suffix;
    for (const auto& [key, value] : given.items()) {
      if (!value.is_array()) params[key] = value;
    }
    for (std::size_t g = 0; g < grid_keys.size(); ++g) {
      const Json& v = given.at(grid_keys[g]).at(pos[g]);
      params[grid_keys[g]] = v;
      suffix += (suffix.empty() ? "" : ",") + grid_keys[g] + "=" + scalar_text(v);
    }
    AlgorithmSpec spec;
    spec.name = name;
    spec.label = label ? *label : suffix.empty() ? name : name + "[" + suffix + "]";
    spec.params = params;
    spec.options = options_from_params(algorithm, params);
    out.push_back(std::move(spec));

    std::size_t g = grid_keys.size();
    while (g > 0) {
      --g;
      if (++pos[g] < given.at(grid_keys[g]).size()) break;
      pos[g] = 0;
      if (g == 0) return out;
    }
    if (grid_keys.empty()) return out;
  }
}

}  // namespace

BenchmarkConfig parse_config(const Json& input) {
  ObjectReader r(input, "config");
  BenchmarkConfig config;

  {
    ObjectReader d(r.at("dataset"), "dataset");
    config.dataset.path = d.optional<std::string>("path");
    config.dataset.label_column = d.get<std::string>("label_column", "label");
    config.dataset.quality_column = d.optional<std::string>("quality_column");
    if (d.has("synthetic")) {
      ObjectReader s(d.at("synthetic"), "dataset.synthetic");
      SyntheticSpec syn;
      syn.n_per_class = s.get<Index>("n_per_class", syn.n_per_class);
      syn.n_classes = s.get<int>("n_classes", syn.n_classes);
      syn.separation = s.get<double>("separation", syn.separation);
      syn.dims = s.get<int>("dims", syn.dims);
      syn.seed = s.get<std::uint64_t>("seed", syn.seed);
      s.finish();
      if (syn.n_per_class < 1 || syn.n_classes < 2 || syn.dims < 1 ||
          (syn.n_classes > 2 && syn.dims < 2)) {
        throw Error("dataset.synthetic: invalid sizes");
      }
      config.dataset.synthetic = syn;
    }
    d.mark("synthetic");
    d.finish();
    if (config.dataset.path.has_value() == config.dataset.synthetic.has_value()) {
      throw Error("dataset: give exactly one of path / synthetic");
    }
    if (config.dataset.synthetic && config.dataset.quality_column) {
      throw Error("dataset: a synthetic dataset has no quality column");
    }
  }

  config.trusted_fraction = r.optional<double>("trusted_fraction");
  if (config.trusted_fraction.has_value() == config.dataset.quality_column.has_value()) {
    throw Error("config: set exactly one of trusted_fraction / dataset.quality_column");
  }
  if (config.trusted_fraction && !(*config.trusted_fraction > 0.0 && *config.trusted_fraction < 1.0)) {
    throw Error("trusted_fraction must be in (0, 1)");
  }

  config.corruption = r.has("corruption") ? parse_corruption(r.at("corruption")) : corruption::None{};
  r.mark("corruption");
  if (std::holds_alternative<corruption::WeakLabels>(config.corruption) && !config.trusted_fraction) {
    throw Error("weak_labels corruption needs trusted_fraction");
  }

  const Json& algorithms = r.at("algorithms");
  if (!algorithms.is_array() || algorithms.empty()) throw Error("algorithms: expected a non-empty list");
  std::set<std::string> labels;
  for (const Json& entry : algorithms) {
    for (AlgorithmSpec& spec : parse_algorithm(entry)) {
      if (!labels.insert(spec.label).second) throw Error("duplicate algorithm entry: " + spec.label);
      config.algorithms.push_back(std::move(spec));
    }
  }

  if (r.has("seeds")) {
    try {
      config.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception&) {
      throw Error("seeds: expected a list of non-negative integers");
    }
  }
  r.mark("seeds");
  if (config.seeds.empty()) throw Error("seeds: expected at least one seed");
  config.cv_folds = r.get<int>("cv_folds", config.cv_folds);
  if (config.cv_folds < 2) throw Error("cv_folds must be at least 2");
  config.standardize = r.get<bool>("standardize", config.standardize);
  r.finish();
  return config;
}

BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Json to_json(const BenchmarkConfig& config) {
  Json dataset;
  dataset["label_column"] = config.dataset.label_column;
  dataset["path"] = config.dataset.path ? Json(*config.dataset.path) : Json(nullptr);
  dataset["quality_column"] =
      config.dataset.quality_column ? Json(*config.dataset.quality_column) : Json(nullptr);
  if (config.dataset.synthetic) {
    const SyntheticSpec& s = *config.dataset.synthetic;
    dataset["synthetic"] = {{"n_per_class", s.n_per_class},
                            {"n_classes", s.n_classes},
                            {"separation", s.separation},
                            {"dims", s.dims},
                            {"seed", s.seed}};
  } else {
    dataset["synthetic"] = nullptr;
  }

  Json algorithms = Json::array();
  for (const AlgorithmSpec& a : config.algorithms) {
    algorithms.push_back({{"name", a.name}, {"label", a.label}, {"params", a.params}});
  }

  Json out;
  out["dataset"] = dataset;
  out["trusted_fraction"] = config.trusted_fraction ? Json(*config.trusted_fraction) : Json(nullptr);
  out["corruption"] = corruption_to_json(config.corruption);
  out["algorithms"] = algorithms;
  out["seeds"] = config.seeds;
  out["cv_folds"] = config.cv_folds;
  out["standardize"] = config.standardize;
  return out;
}

std::string config_hash(const BenchmarkConfig& config) {
  const std::string text = to_json(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace bqlearn::bench
