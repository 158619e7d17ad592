#include "hdte/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hdte/errors.hpp"

namespace hdte {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_lengths(const ModelSpec& model) {
  if (model.d < 1) throw std::invalid_argument("model: d must be >= 1");
  const auto d = static_cast<std::size_t>(model.d);
  if (model.p.size() != d || model.pi.size() != d || model.mu1.size() != d ||
      model.mu0.size() != d) {
    throw std::invalid_argument("model: parameter vectors must have length d");
  }
}

std::string fmt(const char* pattern, std::int64_t k, double value) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, static_cast<long long>(k), value);
  return buf;
}

}  // namespace

ValidationReport validate_model(const ModelSpec& model, const ModelClassParams& params) {
  ValidationReport report;
  auto add = [&report](std::string msg) {
    report.ok = false;
    report.violations.push_back(std::move(msg));
  };

  if (model.d < 1) add("d < 1");
  if (!(params.epsilon > 0.0 && params.epsilon < 0.5)) add("epsilon outside (0, 1/2)");

  const auto d = static_cast<std::size_t>(model.d > 0 ? model.d : 0);
  if (model.p.size() != d) add("p has wrong length");
  if (model.pi.size() != d) add("pi has wrong length");
  if (model.mu1.size() != d) add("mu1 has wrong length");
  if (model.mu0.size() != d) add("mu0 has wrong length");
  if (!report.ok) return report;

  double total = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const auto k = static_cast<std::int64_t>(j) + 1;
    total += model.p[j];
    if (!(model.p[j] >= 0.0 && model.p[j] <= 1.0)) add(fmt("p[%lld]=%g outside [0,1]", k, model.p[j]));
    if (!(model.pi[j] >= 0.0 && model.pi[j] <= 1.0))
      add(fmt("pi[%lld]=%g outside [0,1]", k, model.pi[j]));
    if (!(model.mu1[j] >= 0.0 && model.mu1[j] <= 1.0))
      add(fmt("mu1[%lld]=%g outside [0,1]", k, model.mu1[j]));
    if (!(model.mu0[j] >= 0.0 && model.mu0[j] <= 1.0))
      add(fmt("mu0[%lld]=%g outside [0,1]", k, model.mu0[j]));
    if (model.pi[j] < params.epsilon || model.pi[j] > 1.0 - params.epsilon) {
      add(fmt("pi[%lld]=%g violates positivity", k, model.pi[j]));
    }
  }
  if (std::abs(total - 1.0) > kSimplexTol) {
    add(fmt("sum(p)=%.*g != 1", 17, total));
  }
  return report;
}

EstimandValues population_estimands(const ModelSpec& model) {
  check_lengths(model);
  EstimandValues out;
  out.cate.resize(static_cast<std::size_t>(model.d));
  for (std::size_t j = 0; j < out.cate.size(); ++j) {
    out.mean_treated += model.p[j] * model.mu1[j];
    out.mean_untreated += model.p[j] * model.mu0[j];
    out.cate[j] = model.mu1[j] - model.mu0[j];
    const double var_a = model.pi[j] * (1.0 - model.pi[j]);
    out.eta += model.p[j] * var_a * out.cate[j];
    out.rho += model.p[j] * var_a;
  }
  out.ate = out.mean_treated - out.mean_untreated;
  for (double cate_k : out.cate) {
    out.max_heterogeneity = std::max(out.max_heterogeneity, std::abs(cate_k - out.ate));
  }
  out.wate = out.rho > 0.0 ? out.eta / out.rho : 0.0;
  return out;
}

JointCellProbs joint_cell_probs(const ModelSpec& model) {
  check_lengths(model);
  JointCellProbs probs;
  const auto d = static_cast<std::size_t>(model.d);
  probs.w.resize(d);
  probs.q1.resize(d);
  probs.q0.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    probs.w[j] = model.p[j] * model.pi[j];
    probs.q1[j] = probs.w[j] * model.mu1[j];
    probs.q0[j] = model.p[j] * (1.0 - model.pi[j]) * model.mu0[j];
  }
  return probs;
}

namespace {

std::vector<double> json_vector(const nlohmann::json& obj, const char* key, std::int64_t d) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw DataError(std::string("model: missing array '") + key + "'");
  }
  std::vector<double> values = obj[key].get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(d)) {
    throw DataError(std::string("model: '") + key + "' has wrong length");
  }
  return values;
}

}  // namespace

ModelSpec parse_model_json(const std::string& text) {
  nlohmann::json obj = nlohmann::json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw DataError("model: not a JSON object");
  if (!obj.contains("d") || !obj["d"].is_number_integer()) {
    throw DataError("model: missing integer 'd'");
  }
  ModelSpec model;
  model.d = obj["d"].get<std::int64_t>();
  if (model.d < 1) throw DataError("model: d must be >= 1");
  model.p = json_vector(obj, "p", model.d);
  model.pi = json_vector(obj, "pi", model.d);
  model.mu1 = json_vector(obj, "mu1", model.d);
  model.mu0 = json_vector(obj, "mu0", model.d);
  return model;
}

std::string model_to_json(const ModelSpec& model) {
  nlohmann::json obj;
  obj["d"] = model.d;
  obj["p"] = model.p;
  obj["pi"] = model.pi;
  obj["mu1"] = model.mu1;
  obj["mu0"] = model.mu0;
  return obj.dump(2) + "\n";
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) throw DataError("cannot open model file: " + path.string());
  std::stringstream buffer;
  buffer << input.rdbuf();
  return parse_model_json(buffer.str());
}

void save_model(const ModelSpec& model, const std::filesystem::path& path) {
  std::ofstream output(path);
  if (!output) throw DataError("cannot write model file: " + path.string());
  output << model_to_json(model);
}

}  // namespace hdte
