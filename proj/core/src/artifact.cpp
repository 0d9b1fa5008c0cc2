#include "cureweib/artifact.hpp"

#include "cureweib/error.hpp"
#include "text.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>

namespace cureweib {

using json = nlohmann::ordered_json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_mat(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw InputError("ragged matrix in artifact");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json scaling_json(const ColumnScaling& s) { return {{"center", vec(s.center)}, {"scale", vec(s.scale)}}; }
ColumnScaling scaling_from(const json& j) { return {to_vec(j.at("center")), to_vec(j.at("scale"))}; }

json spec_json(const CureLearnerSpec& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"nnet",
           {{"hidden_units", s.nnet.hidden_units},
            {"weight_decay", s.nnet.weight_decay},
            {"seed", s.nnet.seed},
            {"restarts", s.nnet.restarts},
            {"max_iter", s.nnet.max_iter},
            {"tol_grad", s.nnet.tol_grad}}},
          {"additive",
           {{"k_univ", s.additive.k_univ},
            {"k_tensor", s.additive.k_tensor},
            {"gcv", s.additive.gcv},
            {"lambda", s.additive.lambda},
            {"smooths", s.additive.smooths},
            {"interactions", s.additive.interactions}}}};
}

CureLearnerSpec spec_from(const json& j) {
  CureLearnerSpec s;
  s.kind = parse_learner_kind(j.at("kind").get<std::string>());
  const auto& n = j.at("nnet");
  s.nnet.hidden_units = n.at("hidden_units").get<int>();
  s.nnet.weight_decay = n.at("weight_decay").get<double>();
  s.nnet.seed = n.at("seed").get<std::uint64_t>();
  s.nnet.restarts = n.at("restarts").get<int>();
  s.nnet.max_iter = n.at("max_iter").get<int>();
  s.nnet.tol_grad = n.at("tol_grad").get<double>();
  const auto& a = j.at("additive");
  s.additive.k_univ = a.at("k_univ").get<int>();
  s.additive.k_tensor = a.at("k_tensor").get<int>();
  s.additive.gcv = a.at("gcv").get<bool>();
  s.additive.lambda = a.at("lambda").get<double>();
  s.additive.smooths = a.at("smooths").get<bool>();
  s.additive.interactions = a.at("interactions").get<bool>();
  return s;
}

json config_json(const EmConfig& c) {
  json j = {{"epsilon", c.epsilon},
            {"max_iter", c.max_iter},
            {"learner", spec_json(c.learner)},
            {"seed", c.seed},
            {"gamma0", c.gamma0 ? vec(*c.gamma0) : json(nullptr)},
            {"xi0", c.xi0 ? vec(*c.xi0) : json(nullptr)},
            {"nm_evals_per_dim", c.nm_evals_per_dim},
            {"nm_tol", c.nm_tol},
            {"standardize", c.standardize}};
  return j;
}

EmConfig config_from(const json& j) {
  EmConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  c.max_iter = j.at("max_iter").get<int>();
  c.learner = spec_from(j.at("learner"));
  c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("gamma0").is_null()) c.gamma0 = to_vec(j.at("gamma0"));
  if (!j.at("xi0").is_null()) c.xi0 = to_vec(j.at("xi0"));
  c.nm_evals_per_dim = j.at("nm_evals_per_dim").get<int>();
  c.nm_tol = j.at("nm_tol").get<double>();
  c.standardize = j.at("standardize").get<bool>();
  return c;
}

json learner_json(const LearnerState& s) {
  json j = {{"kind", std::string(to_string(s.kind))},
            {"input_dim", s.input_dim},
            {"fitted", s.fitted},
            {"converged", s.converged},
            {"objective", s.objective}};
  switch (s.kind) {
    case LearnerKind::glm_logit:
      j["coefficients"] = vec(std::get<GlmState>(s.model).coefficients);
      break;
    case LearnerKind::neural_net: {
      const auto& n = std::get<NeuralNetState>(s.model);
      j["hidden"] = mat(n.weights.hidden);
      j["output"] = vec(n.weights.output);
      j["output_bias"] = n.weights.output_bias;
      j["weight_decay"] = n.weight_decay;
      break;
    }
    case LearnerKind::additive: {
      const auto& a = std::get<AdditiveModelState>(s.model);
      j["parametric_columns"] = a.parametric_columns;
      json smooths = json::array();
      for (const auto& t : a.smooths) {
        json margins = json::array();
        for (const auto& m : t.margins) margins.push_back(m.knots());
        json constraints = json::array();
        for (const auto& z : t.constraints) constraints.push_back(mat(z));
        smooths.push_back({{"kind", t.kind == SmoothTerm::Kind::univariate ? "univariate" : "tensor"},
                           {"columns", t.columns},
                           {"knots", std::move(margins)},
                           {"constraints", std::move(constraints)},
                           {"start", t.block.start},
                           {"width", t.block.width},
                           {"edf", t.edf}});
      }
      j["smooths"] = std::move(smooths);
      json penalties = json::array();
      for (const auto& p : a.penalties) penalties.push_back({{"start", p.start}, {"matrix", mat(p.matrix)}});
      j["penalties"] = std::move(penalties);
      j["penalty_scale"] = a.penalty_scale;
      j["lambdas"] = a.lambdas;
      j["coefficients"] = vec(a.coefficients);
      break;
    }
  }
  return j;
}

LearnerState learner_from(const json& j) {
  LearnerState s;
  s.kind = parse_learner_kind(j.at("kind").get<std::string>());
  s.input_dim = j.at("input_dim").get<Eigen::Index>();
  s.fitted = j.at("fitted").get<bool>();
  s.converged = j.at("converged").get<bool>();
  s.objective = j.at("objective").get<double>();
  switch (s.kind) {
    case LearnerKind::glm_logit:
      s.model = GlmState{to_vec(j.at("coefficients"))};
      break;
    case LearnerKind::neural_net: {
      NeuralNetState n;
      n.weights.hidden = to_mat(j.at("hidden"), s.input_dim);
      n.weights.output = to_vec(j.at("output"));
      n.weights.output_bias = j.at("output_bias").get<double>();
      n.weight_decay = j.at("weight_decay").get<double>();
      s.model = std::move(n);
      break;
    }
    case LearnerKind::additive: {
      AdditiveModelState a;
      a.parametric_columns = j.at("parametric_columns").get<std::vector<int>>();
      for (const auto& t : j.at("smooths")) {
        SmoothTerm term;
        const auto kind = t.at("kind").get<std::string>();
        if (kind != "univariate" && kind != "tensor") throw InputError("unknown smooth kind '" + kind + "'");
        term.kind = kind == "univariate" ? SmoothTerm::Kind::univariate : SmoothTerm::Kind::tensor;
        term.columns = t.at("columns").get<std::vector<int>>();
        for (const auto& k : t.at("knots")) term.margins.emplace_back(k.get<std::vector<double>>());
        for (const auto& z : t.at("constraints")) term.constraints.push_back(to_mat(z));
        term.block = {t.at("start").get<Eigen::Index>(), t.at("width").get<Eigen::Index>()};
        term.edf = t.at("edf").get<double>();
        a.smooths.push_back(std::move(term));
      }
      for (const auto& p : j.at("penalties")) a.penalties.push_back({p.at("start").get<Eigen::Index>(), to_mat(p.at("matrix"))});
      a.penalty_scale = j.at("penalty_scale").get<std::vector<double>>();
      a.lambdas = j.at("lambdas").get<std::vector<double>>();
      a.coefficients = to_vec(j.at("coefficients"));
      s.model = std::move(a);
      break;
    }
  }
  return s;
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const ModelArtifact& a, bool include_timestamp) {
  const auto& m = a.model;
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  if (include_timestamp) j["timestamp"] = a.timestamp;
  j["covariates"] = {{"survival", a.covariates.survival}, {"cure", a.covariates.cure}};
  j["config"] = config_json(m.config);
  j["learner"] = learner_json(m.learner);
  j["regression"] = {{"gamma", vec(m.regression.gamma)}, {"xi", vec(m.regression.xi)}};
  j["standardization"] = {{"survival", scaling_json(m.scaling.survival)}, {"cure", scaling_json(m.scaling.cure)}};
  j["fit"] = {{"n", m.n},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"loglik", m.log_likelihood()},
              {"trace", m.trace},
              {"weibull_unconverged", m.weibull_unconverged},
              {"posterior", vec(m.posterior.u)}};
  return j;
}

ModelArtifact artifact_from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kArtifactSchemaVersion)
      throw InputError("artifact schema version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kArtifactSchemaVersion) + ")");
    ModelArtifact a;
    if (j.contains("timestamp")) a.timestamp = j.at("timestamp").get<std::string>();
    a.covariates.survival = j.at("covariates").at("survival").get<std::vector<std::string>>();
    a.covariates.cure = j.at("covariates").at("cure").get<std::vector<std::string>>();
    auto& m = a.model;
    m.config = config_from(j.at("config"));
    m.learner = learner_from(j.at("learner"));
    m.regression = {to_vec(j.at("regression").at("gamma")), to_vec(j.at("regression").at("xi"))};
    m.scaling = {scaling_from(j.at("standardization").at("survival")),
                 scaling_from(j.at("standardization").at("cure"))};
    const auto& f = j.at("fit");
    m.n = f.at("n").get<std::size_t>();
    m.iterations = f.at("iterations").get<int>();
    m.converged = f.at("converged").get<bool>();
    m.trace = f.at("trace").get<std::vector<double>>();
    m.weibull_unconverged = f.at("weibull_unconverged").get<std::vector<int>>();
    m.posterior.u = to_vec(f.at("posterior"));
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model artifact: ") + e.what());
  }
}

void save_artifact(std::ostream& out, const ModelArtifact& a) { out << to_json(a).dump(2) << '\n'; }

void save_artifact(const std::filesystem::path& path, const ModelArtifact& a) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write artifact '" + path.string() + "'");
  save_artifact(out, a);
}

ModelArtifact load_artifact(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("artifact is not valid JSON: ") + e.what());
  }
  return artifact_from_json(j);
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open artifact '" + path.string() + "'");
  return load_artifact(in);
}

std::string artifact_fingerprint(const ModelArtifact& a) { return to_json(a, false).dump(); }

void write_plot_data(std::ostream& out, const std::vector<PlotRow>& rows) {
  out << "group,source,time_years,value,lo,hi\n";
  for (const auto& r : rows) {
    out << text::quote_csv(r.group) << ',' << text::quote_csv(r.source) << ',' << text::format_double(r.time_years)
        << ',' << text::format_double(r.value) << ',' << (r.lo ? text::format_double(*r.lo) : "") << ','
        << (r.hi ? text::format_double(*r.hi) : "") << '\n';
  }
}

std::vector<PlotRow> read_plot_data(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "group,source,time_years,value,lo,hi")
    throw InputError("plot data must start with the header group,source,time_years,value,lo,hi");
  std::vector<PlotRow> rows;
  std::size_t row = 0;
  auto num = [&](const std::string& s) {
    const auto v = text::parse_number<double>(s);
    if (!v) throw InputError("plot data row " + std::to_string(row) + ": bad number '" + s + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    ++row;
    const auto f = text::split_quoted(line);
    if (f.size() != 6) throw InputError("plot data row " + std::to_string(row) + ": expected 6 fields");
    PlotRow r{f[0], f[1], num(f[2]), num(f[3]), std::nullopt, std::nullopt};
    if (!f[4].empty()) r.lo = num(f[4]);
    if (!f[5].empty()) r.hi = num(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace cureweib
