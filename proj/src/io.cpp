#include "netinf/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "netinf/error.hpp"

namespace netinf::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

namespace {

template <class T>
T get(const json& doc, const char* key) {
  if (!doc.contains(key)) throw IoError(std::string("missing key '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols,
                                 const char* name) {
  if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows)
    throw IoError(std::string("matrix '") + name + "' has the wrong number of rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = doc[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError(std::string("matrix '") + name + "' has a row of the wrong length");
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!row[j].is_number()) throw IoError(std::string("matrix '") + name + "' entry not numeric");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

json adjacency_to_json(const Adjacency& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

Adjacency adjacency_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols,
                              const char* name) {
  return matrix_from_json(doc, rows, cols, name).array() != 0.0;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& doc) {
  if (!doc.is_array()) throw IoError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) v(static_cast<Eigen::Index>(i)) = doc[i].get<double>();
  return v;
}

// JSON has no infinities or NaN: they are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& v, double fallback) { return v.is_null() ? fallback : v.get<double>(); }

json labels(const std::vector<GroupId>& groups) {
  json out = json::array();
  for (const auto& g : groups) out.push_back(g.label());
  return out;
}

std::vector<GroupId> groups_from_json(const json& doc) {
  std::vector<GroupId> out;
  for (const auto& v : doc) out.push_back(GroupId::parse(v.get<std::string>()));
  return out;
}

void check_format(const json& doc, const char* format) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != format)
    throw IoError(std::string("expected a '") + format + "' document");
}

}  // namespace

json model_to_json(const StateSpaceModel& model) {
  json doc;
  doc["format"] = "netinf-model";
  doc["version"] = 1;
  doc["nodes"] = model.nodes();
  doc["observed"] = model.observed;
  doc["inputs"] = model.inputs();
  doc["noise_channels"] = model.noise_channels();
  doc["a"] = matrix_to_json(model.a);
  doc["b_u"] = matrix_to_json(model.b_u);
  doc["b_e"] = matrix_to_json(model.b_e);
  doc["generator"] = {{"topology", model.topology}, {"seed", model.seed}, {"density", model.density}};
  return doc;
}

StateSpaceModel model_from_json(const json& doc) {
  check_format(doc, "netinf-model");
  const int n = get<int>(doc, "nodes");
  const int m = get<int>(doc, "inputs");
  const int q = get<int>(doc, "noise_channels");
  if (n < 1 || m < 0 || q < 0) throw IoError("model dimensions must be non-negative");
  StateSpaceModel model;
  model.observed = get<int>(doc, "observed");
  model.a = matrix_from_json(doc.at("a"), n, n, "a");
  model.b_u = matrix_from_json(doc.at("b_u"), n, m, "b_u");
  model.b_e = matrix_from_json(doc.at("b_e"), n, q, "b_e");
  if (doc.contains("generator")) {
    const json& g = doc["generator"];
    model.topology = g.value("topology", std::string("custom"));
    model.seed = g.value("seed", std::uint64_t{0});
    model.density = g.value("density", 0.0);
  }
  model.validate();
  return model;
}

json structure_to_json(const DsfStructure& s) {
  json doc;
  doc["format"] = "netinf-truth";
  doc["observed"] = s.observed();
  doc["inputs"] = s.inputs();
  doc["links"] = s.link_count();
  doc["q_adj"] = adjacency_to_json(s.q_adj);
  doc["p_adj"] = adjacency_to_json(s.p_adj);
  return doc;
}

DsfStructure structure_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("q_adj")) throw IoError("expected a structure document");
  const int p = get<int>(doc, "observed");
  const int m = get<int>(doc, "inputs");
  return {adjacency_from_json(doc.at("q_adj"), p, p, "q_adj"),
          adjacency_from_json(doc.at("p_adj"), p, m, "p_adj")};
}

std::string experiment_csv(const Experiment& e) {
  std::string out;
  for (int i = 0; i < e.observed(); ++i) out += (i ? ",y_" : "y_") + std::to_string(i + 1);
  for (int k = 0; k < e.inputs(); ++k)
    out += (e.observed() + k ? ",u_" : "u_") + std::to_string(k + 1);
  out += '\n';
  for (int t = 0; t < e.n_points(); ++t) {
    for (int i = 0; i < e.observed(); ++i) {
      if (i) out += ',';
      out += format_double(e.y(i, t));
    }
    for (int k = 0; k < e.inputs(); ++k) {
      if (e.observed() + k) out += ',';
      out += format_double(e.u(k, t));
    }
    out += '\n';
  }
  return out;
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

void write_experiment(const fs::path& csv, const Experiment& e) {
  write_text(csv, experiment_csv(e));
  json side;
  side["format"] = "netinf-experiment";
  side["csv"] = csv.filename().string();
  side["points"] = e.n_points();
  side["observed"] = e.observed();
  side["inputs"] = e.inputs();
  side["snr"] = e.snr.to_string();
  side["seed"] = e.seed;
  write_json(sidecar_path(csv), side);
}

Experiment read_experiment(const fs::path& csv) {
  std::istringstream in(read_text(csv));
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + csv.string() + "' is empty");
  int y_cols = 0, u_cols = 0;
  {
    std::istringstream hs(line);
    std::string name;
    while (std::getline(hs, name, ',')) {
      if (name.rfind("y_", 0) == 0 && u_cols == 0)
        ++y_cols;
      else if (name.rfind("u_", 0) == 0)
        ++u_cols;
      else
        throw IoError("'" + csv.string() + "': unexpected column '" + name + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw IoError("'" + csv.string() + "': bad number '" + cell + "'");
      row.push_back(v);
    }
    if (static_cast<int>(row.size()) != y_cols + u_cols)
      throw IoError("'" + csv.string() + "': row with the wrong number of columns");
    rows.push_back(std::move(row));
  }
  Experiment e;
  const int n = static_cast<int>(rows.size());
  e.y.resize(y_cols, n);
  e.u.resize(u_cols, n);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < y_cols; ++i) e.y(i, t) = rows[t][i];
    for (int k = 0; k < u_cols; ++k) e.u(k, t) = rows[t][y_cols + k];
  }
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    const json doc = read_json(side);
    check_format(doc, "netinf-experiment");
    if (get<int>(doc, "points") != n || get<int>(doc, "observed") != y_cols ||
        get<int>(doc, "inputs") != u_cols)
      throw IoError("'" + side.string() + "' disagrees with the CSV dimensions");
    e.snr = SnrSetting::parse(get<std::string>(doc, "snr"));
    e.seed = get<std::uint64_t>(doc, "seed");
  }
  return e;
}

json vi_config_to_json(const vi::ViConfig& c) {
  return {{"a0", c.a0},
          {"b0", c.b0},
          {"max_iter", c.max_iter},
          {"tol", c.tol},
          {"mh_samples", c.n_mh_samples},
          {"burn_in", c.n_burn_in},
          {"proposal_window", c.proposal_window},
          {"quad_tol", c.quad_tol},
          {"seed", c.seed},
          {"beta_expectation",
           c.beta_expectation == vi::BetaExpectation::kQuadrature ? "quadrature" : "mh"}};
}

vi::ViConfig vi_config_from_json(const json& doc) {
  vi::ViConfig c;
  c.a0 = doc.value("a0", c.a0);
  c.b0 = doc.value("b0", c.b0);
  c.max_iter = doc.value("max_iter", c.max_iter);
  c.tol = doc.value("tol", c.tol);
  c.n_mh_samples = doc.value("mh_samples", c.n_mh_samples);
  c.n_burn_in = doc.value("burn_in", c.n_burn_in);
  c.proposal_window = doc.value("proposal_window", c.proposal_window);
  c.quad_tol = doc.value("quad_tol", c.quad_tol);
  c.seed = doc.value("seed", c.seed);
  const std::string be = doc.value("beta_expectation", std::string("mh"));
  if (be == "quadrature")
    c.beta_expectation = vi::BetaExpectation::kQuadrature;
  else if (be == "mh")
    c.beta_expectation = vi::BetaExpectation::kMetropolisHastings;
  else
    throw ParameterError("beta_expectation must be mh or quadrature");
  return c;
}

json keb_config_to_json(const keb::KebConfig& c) {
  return {{"max_iter", c.max_iter},       {"tol", c.tol},
          {"initial_gamma", c.initial_gamma}, {"initial_beta", c.initial_beta},
          {"prune_rel", c.prune_rel},     {"beta_grid", c.beta_grid},
          {"golden_iters", c.golden_iters}};
}

keb::KebConfig keb_config_from_json(const json& doc) {
  keb::KebConfig c;
  c.max_iter = doc.value("max_iter", c.max_iter);
  c.tol = doc.value("tol", c.tol);
  c.initial_gamma = doc.value("initial_gamma", c.initial_gamma);
  c.initial_beta = doc.value("initial_beta", c.initial_beta);
  c.prune_rel = doc.value("prune_rel", c.prune_rel);
  c.beta_grid = doc.value("beta_grid", c.beta_grid);
  c.golden_iters = doc.value("golden_iters", c.golden_iters);
  return c;
}

json inference_config_to_json(const InferenceConfig& c) {
  return {{"method", method_tag(c.method)},
          {"trunc", c.trunc},
          {"include_inputs", c.include_inputs},
          {"tie_tolerance", c.tie_tolerance},
          {"vi", vi_config_to_json(c.vi)},
          {"keb", keb_config_to_json(c.keb)}};
}

InferenceConfig inference_config_from_json(const json& doc) {
  InferenceConfig c;
  c.method = parse_method(doc.value("method", std::string("vi")));
  c.trunc = doc.value("trunc", c.trunc);
  c.include_inputs = doc.value("include_inputs", c.include_inputs);
  c.tie_tolerance = doc.value("tie_tolerance", c.tie_tolerance);
  if (doc.contains("vi")) c.vi = vi_config_from_json(doc["vi"]);
  if (doc.contains("keb")) c.keb = keb_config_from_json(doc["keb"]);
  return c;
}

json network_to_json(const InferredNetwork& net) {
  json doc;
  doc["format"] = "netinf-network";
  doc["method"] = net.method;
  doc["trunc"] = net.trunc;
  doc["observed"] = static_cast<int>(net.q_adj.rows());
  doc["inputs"] = static_cast<int>(net.p_adj.cols());
  doc["q_adj"] = adjacency_to_json(net.q_adj);
  doc["p_adj"] = adjacency_to_json(net.p_adj);
  json links = json::array();
  for (const auto& l : net.links)
    links.push_back({{"source", l.source.label()},
                     {"target", l.target},
                     {"confidence", l.confidence},
                     {"impulse", vector_to_json(l.impulse)}});
  doc["links"] = std::move(links);
  json nodes = json::array();
  for (const auto& n : net.nodes) {
    json node;
    node["target"] = n.target;
    node["resolved"] = n.resolved;
    node["error"] = n.error;
    const auto& tr = n.trace;
    node["chosen"] = tr.chosen;
    node["ranking"] = labels(tr.ranking);
    node["confidences"] = tr.confidences;
    json cands = json::array();
    for (const auto& c : tr.candidates)
      cands.push_back({{"groups", labels(c.structure.active_groups)},
                       {"removed", labels(c.removed)},
                       {"score", number_or_null(c.score)},
                       {"failed", c.failed},
                       {"error", c.error},
                       {"iterations", c.iterations},
                       {"converged", c.converged}});
    node["candidates"] = std::move(cands);
    node["blocks"] = labels(tr.blocks);
    json w = json::array();
    for (const auto& v : tr.w_hat) w.push_back(vector_to_json(v));
    node["w_hat"] = std::move(w);
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

InferredNetwork network_from_json(const json& doc) {
  check_format(doc, "netinf-network");
  InferredNetwork net;
  net.method = get<std::string>(doc, "method");
  net.trunc = get<int>(doc, "trunc");
  const int p = get<int>(doc, "observed");
  const int m = get<int>(doc, "inputs");
  net.q_adj = adjacency_from_json(doc.at("q_adj"), p, p, "q_adj");
  net.p_adj = adjacency_from_json(doc.at("p_adj"), p, m, "p_adj");
  for (const auto& l : doc.at("links")) {
    LinkEstimate link;
    link.source = GroupId::parse(get<std::string>(l, "source"));
    link.target = get<int>(l, "target");
    link.confidence = get<double>(l, "confidence");
    link.impulse = vector_from_json(l.at("impulse"));
    net.links.push_back(std::move(link));
  }
  for (const auto& n : doc.at("nodes")) {
    NodeResult node;
    node.target = get<int>(n, "target");
    node.resolved = get<bool>(n, "resolved");
    node.error = get<std::string>(n, "error");
    auto& tr = node.trace;
    tr.target = node.target;
    tr.chosen = get<int>(n, "chosen");
    tr.ranking = groups_from_json(n.at("ranking"));
    tr.confidences = get<std::vector<double>>(n, "confidences");
    for (const auto& c : n.at("candidates")) {
      Candidate cand;
      cand.structure.target = node.target;
      cand.structure.active_groups = groups_from_json(c.at("groups"));
      cand.removed = groups_from_json(c.at("removed"));
      cand.score = number_or(c.at("score"), -std::numeric_limits<double>::infinity());
      cand.failed = get<bool>(c, "failed");
      cand.error = get<std::string>(c, "error");
      cand.iterations = get<int>(c, "iterations");
      cand.converged = get<bool>(c, "converged");
      tr.candidates.push_back(std::move(cand));
    }
    tr.blocks = groups_from_json(n.at("blocks"));
    for (const auto& w : n.at("w_hat")) tr.w_hat.push_back(vector_from_json(w));
    net.nodes.push_back(std::move(node));
  }
  return net;
}

json benchmark_config_to_json(const eval::BenchmarkConfig& c) {
  json snrs = json::array();
  for (const auto& s : c.snrs) snrs.push_back(s.to_string());
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_tag(m));
  return {{"suite", c.suite},
          {"topology", eval::to_string(c.topology)},
          {"snrs", snrs},
          {"lengths", c.lengths},
          {"methods", methods},
          {"trials", c.trials},
          {"seed", c.seed},
          {"nodes", c.nodes},
          {"observed", c.observed},
          {"density", c.density},
          {"hidden_noise", c.hidden_noise},
          {"ring_hidden", c.ring_hidden},
          {"validation_points", c.validation_points},
          {"inference", inference_config_to_json(c.inference)}};
}

eval::BenchmarkConfig benchmark_config_from_json(const json& doc) {
  if (!doc.is_object()) throw IoError("benchmark grid must be a JSON object");
  eval::BenchmarkConfig c = eval::preset(doc.value("suite", std::string("custom")));
  if (doc.contains("topology")) c.topology = eval::parse_topology(doc["topology"].get<std::string>());
  if (doc.contains("snrs")) {
    c.snrs.clear();
    for (const auto& s : doc["snrs"])
      c.snrs.push_back(s.is_number() ? SnrSetting::finite(s.get<double>())
                                     : SnrSetting::parse(s.get<std::string>()));
  }
  if (doc.contains("lengths")) c.lengths = doc["lengths"].get<std::vector<int>>();
  if (doc.contains("methods")) {
    c.methods.clear();
    for (const auto& m : doc["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  c.trials = doc.value("trials", c.trials);
  c.seed = doc.value("seed", c.seed);
  c.nodes = doc.value("nodes", c.nodes);
  c.observed = doc.value("observed", c.observed);
  c.density = doc.value("density", c.density);
  c.hidden_noise = doc.value("hidden_noise", c.hidden_noise);
  c.ring_hidden = doc.value("ring_hidden", c.ring_hidden);
  c.validation_points = doc.value("validation_points", c.validation_points);
  if (doc.contains("inference")) c.inference = inference_config_from_json(doc["inference"]);
  return c;
}

std::string results_csv_header(bool with_runtime) {
  std::string h =
      "suite,topology,snr,n_points,method,trial,seed,ok,tpr,prec,true_links,inferred_links,"
      "true_positives,mean_fitness";
  if (with_runtime) h += ",runtime";
  return h + ",error\n";
}

std::string results_csv(const eval::BenchmarkConfig& config, const eval::BenchmarkResult& result,
                        bool with_runtime) {
  std::string out = results_csv_header(with_runtime);
  for (const auto& t : result.trials) {
    std::string err = t.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    out += config.suite + ',' + eval::to_string(t.condition.topology) + ',' +
           t.condition.snr.to_string() + ',' + std::to_string(t.condition.n_points) + ',' +
           method_tag(t.condition.method) + ',' + std::to_string(t.trial) + ',' +
           std::to_string(t.seed) + ',' + (t.ok ? "1" : "0") + ',' + format_double(t.score.tpr) +
           ',' + format_double(t.score.prec) + ',' + std::to_string(t.score.true_links) + ',' +
           std::to_string(t.score.inferred_links) + ',' + std::to_string(t.score.true_positives) +
           ',' + format_double(t.mean_fitness);
    if (with_runtime) out += ',' + format_double(t.runtime);
    out += ',' + err + '\n';
  }
  return out;
}

json summary_to_json(const eval::BenchmarkConfig& config, const eval::BenchmarkResult& result) {
  json doc;
  doc["format"] = "netinf-benchmark-summary";
  doc["config"] = benchmark_config_to_json(config);
  doc["metadata"] = {
      {"prec_when_nothing_inferred", 1.0},
      {"fitness", "one-step-ahead prediction on held-out data, averaged over nodes"},
      {"links_scored", "Q and P together; the self group is not a link"},
      {"keb_prune_rel", config.inference.keb.prune_rel},
      {"seed_derivation",
       "trial seed = derive(master, trial); network/train/validation/inference = "
       "derive(trial seed, 1/2/3/4)"}};
  json cells = json::array();
  int failed = 0;
  for (const auto& c : result.cells) {
    failed += c.failures;
    cells.push_back({{"topology", eval::to_string(c.condition.topology)},
                     {"snr", c.condition.snr.to_string()},
                     {"n_points", c.condition.n_points},
                     {"method", method_tag(c.condition.method)},
                     {"trials", c.trials},
                     {"failures", c.failures},
                     {"mean_tpr", number_or_null(c.mean_tpr)},
                     {"se_tpr", number_or_null(c.se_tpr)},
                     {"mean_prec", number_or_null(c.mean_prec)},
                     {"se_prec", number_or_null(c.se_prec)},
                     {"mean_fitness", number_or_null(c.mean_fitness)},
                     {"median_fitness", number_or_null(c.median_fitness)}});
  }
  doc["cells"] = std::move(cells);
  doc["failed_trials"] = failed;
  return doc;
}

}  // namespace netinf::io
