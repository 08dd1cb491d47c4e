#include "putl/cli.hpp"

#include "putl/averaging.hpp"
#include "putl/csv.hpp"
#include "putl/error.hpp"
#include "putl/folds.hpp"
#include "putl/kvfile.hpp"
#include "putl/links.hpp"
#include "putl/metrics.hpp"
#include "putl/parallel.hpp"
#include "putl/simharness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace putl::cli {

namespace fs = std::filesystem;

namespace {

std::string provenance(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

std::string read_file_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::MatrixXd Model::design(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != static_cast<Eigen::Index>(features.size())) {
    throw DataError("data has " + std::to_string(raw.cols()) + " covariates, model expects " +
                    std::to_string(features.size()));
  }
  Eigen::MatrixXd x = raw;
  if (standardize) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = (x.col(j).array() - center[j]) / scale[j];
  }
  if (!intercept) return x;
  Eigen::MatrixXd with(x.rows(), x.cols() + 1);
  with.col(0).setOnes();
  with.rightCols(x.cols()) = x;
  return with;
}

void save_model(const Model& model, const fs::path& dir) {
  fs::create_directories(dir);
  KvWriter w;
  w.comment("config_hash=" + model.config_hash + " seed=" + std::to_string(model.seed));
  w.put("config_hash", std::string_view(model.config_hash));
  w.put("seed", static_cast<long>(model.seed));
  w.put("threshold", model.threshold);
  w.put("features", std::string_view(join_strings(model.features)));
  w.put("intercept", model.intercept);
  w.put("standardize", model.standardize);
  if (model.standardize) {
    w.put("center", std::string_view(join_doubles(to_std(model.center))));
    w.put("scale", std::string_view(join_doubles(to_std(model.scale))));
  }
  w.put("cv_value", model.cv_value);
  w.put("target_excluded", model.target_excluded);
  w.put("averaged", std::string_view(join_doubles(to_std(model.averaged))));
  for (std::size_t m = 0; m < model.candidate_ids.size(); ++m) {
    w.section("candidate", model.candidate_ids[m]);
    w.put("weight", model.weights[static_cast<Eigen::Index>(m)]);
    w.put("vertex_cv", model.vertex_cv[m]);
    w.put("coef", std::string_view(join_doubles(to_std(model.candidate_coefs[m]))));
  }
  write_text_file(dir / "model.txt", w.str());
}

Model load_model(const fs::path& dir) {
  const KvDocument doc = read_kv_file(dir / "model.txt");
  const KvSection& g = doc.global;
  Model m;
  m.config_hash = doc.require(g, "config_hash").value;
  m.seed = static_cast<std::uint64_t>(doc.to_int(doc.require(g, "seed")));
  m.threshold = doc.to_double(doc.require(g, "threshold"));
  m.features = doc.to_strings(doc.require(g, "features"));
  m.intercept = doc.to_bool(doc.require(g, "intercept"));
  m.standardize = doc.to_bool(doc.require(g, "standardize"));
  const auto p = static_cast<Eigen::Index>(m.features.size());
  const Eigen::Index dim = p + (m.intercept ? 1 : 0);
  if (m.standardize) {
    const auto& ce = doc.require(g, "center");
    const auto& se = doc.require(g, "scale");
    m.center = to_eigen(doc.to_doubles(ce));
    m.scale = to_eigen(doc.to_doubles(se));
    if (m.center.size() != p) doc.fail(ce.line, "center length does not match features");
    if (m.scale.size() != p) doc.fail(se.line, "scale length does not match features");
  }
  m.cv_value = doc.to_double(doc.require(g, "cv_value"));
  m.target_excluded = doc.to_bool(doc.require(g, "target_excluded"));
  const auto& ae = doc.require(g, "averaged");
  m.averaged = to_eigen(doc.to_doubles(ae));
  if (m.averaged.size() != dim) doc.fail(ae.line, "averaged coefficient length does not match features");
  std::vector<double> weights;
  for (const auto& s : doc.sections) {
    if (s.kind != "candidate") doc.fail(s.line, "unexpected section kind '" + s.kind + "'");
    m.candidate_ids.push_back(s.name);
    weights.push_back(doc.to_double(doc.require(s, "weight")));
    m.vertex_cv.push_back(doc.to_double(doc.require(s, "vertex_cv")));
    const auto& ce = doc.require(s, "coef");
    m.candidate_coefs.push_back(to_eigen(doc.to_doubles(ce)));
    if (m.candidate_coefs.back().size() != dim) doc.fail(ce.line, "coefficient length does not match features");
  }
  if (m.candidate_ids.empty()) doc.fail(1, "model has no candidates");
  m.weights = to_eigen(weights);
  return m;
}

LabeledTable read_labeled_csv(const fs::path& path, const std::vector<std::string>& features) {
  const CsvTable t = read_csv(path);
  LabeledTable out;
  const int ycol = t.column("y");
  const int zcol = t.column("z");
  out.has_y = ycol >= 0;
  out.has_z = zcol >= 0;
  std::vector<int> cols;
  if (features.empty()) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (static_cast<int>(j) == ycol || static_cast<int>(j) == zcol) continue;
      out.features.push_back(t.header[j]);
      cols.push_back(static_cast<int>(j));
    }
  } else {
    for (const auto& f : features) {
      const int c = t.column(f);
      if (c < 0) throw DataError(path.string() + ":1: missing feature column '" + f + "'");
      cols.push_back(c);
    }
    out.features = features;
  }
  if (cols.empty()) throw DataError(path.string() + ":1: no feature columns");
  out.x.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  const auto label = [&t](std::size_t row, int col) -> std::optional<int> {
    const auto& cell = t.rows[row][static_cast<std::size_t>(col)];
    if (!cell) return std::nullopt;
    if (*cell != 0.0 && *cell != 1.0) t.fail(row, "column '" + t.header[static_cast<std::size_t>(col)] + "' must be 0 or 1");
    return static_cast<int>(*cell);
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto& cell = t.rows[i][static_cast<std::size_t>(cols[k])];
      if (!cell) t.fail(i, "missing value in column '" + t.header[static_cast<std::size_t>(cols[k])] + "'");
      if (!std::isfinite(*cell)) t.fail(i, "non-finite value in column '" + t.header[static_cast<std::size_t>(cols[k])] + "'");
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *cell;
    }
    if (out.has_y) out.y.push_back(label(i, ycol));
    if (out.has_z) out.z.push_back(label(i, zcol));
  }
  return out;
}

namespace {

struct ManifestDomain {
  std::string id;
  bool target = false;
  Scheme scheme = Scheme::pu;
  fs::path data;
  double pi1 = 0.0;
  int line = 0;
};

struct Manifest {
  int folds = 5;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  bool intercept = false;
  bool standardize = false;
  bool l1 = false;
  int grid_size = 20;
  double grid_ratio = 1e-3;
  std::vector<ManifestDomain> domains;  // target first
  std::string hash;
};

Manifest read_manifest(const fs::path& path) {
  const std::string text = read_file_text(path);
  std::istringstream in(text);
  const KvDocument doc = parse_kv(in, path.string());
  const KvSection& g = doc.global;
  static const char* const known[] = {"K", "seed", "threshold", "intercept", "standardize",
                                      "l1", "l1.grid_size", "l1.ratio"};
  for (const auto& e : g.entries) {
    if (std::find_if(std::begin(known), std::end(known), [&e](const char* k) { return e.key == k; }) == std::end(known)) {
      doc.fail(e.line, "unknown option '" + e.key + "'");
    }
  }
  Manifest m;
  m.folds = static_cast<int>(doc.get_int(g, "K", 5));
  if (m.folds < 2) doc.fail(g.find("K")->line, "K must be at least 2");
  m.seed = static_cast<std::uint64_t>(doc.get_int(g, "seed", 1));
  m.threshold = doc.get_double(g, "threshold", 0.5);
  m.intercept = doc.get_bool(g, "intercept", false);
  m.standardize = doc.get_bool(g, "standardize", false);
  m.l1 = doc.get_bool(g, "l1", false);
  m.grid_size = static_cast<int>(doc.get_int(g, "l1.grid_size", 20));
  m.grid_ratio = doc.get_double(g, "l1.ratio", 1e-3);
  std::string hash_input = text;
  const fs::path base = path.parent_path();
  for (const auto& s : doc.sections) {
    if (s.kind != "domain") doc.fail(s.line, "unexpected section kind '" + s.kind + "'");
    ManifestDomain d;
    d.id = s.name;
    d.line = s.line;
    const KvEntry& role = doc.require(s, "role");
    if (role.value != "target" && role.value != "source") doc.fail(role.line, "role must be target or source");
    d.target = role.value == "target";
    const KvEntry& scheme = doc.require(s, "scheme");
    try {
      d.scheme = parse_scheme(scheme.value);
    } catch (const DataError& e) {
      doc.fail(scheme.line, e.what());
    }
    const KvEntry& data = doc.require(s, "data");
    d.data = fs::path(data.value).is_absolute() ? fs::path(data.value) : base / data.value;
    if (!fs::exists(d.data)) doc.fail(data.line, "data file not found: " + d.data.string());
    const KvEntry& pi1 = doc.require(s, "pi1");
    d.pi1 = doc.to_double(pi1);
    if (!(d.pi1 > 0.0 && d.pi1 < 1.0)) doc.fail(pi1.line, "pi1 must lie in (0, 1)");
    if (const KvEntry* pl = s.find("p_L")) {
      const double v = doc.to_double(*pl);
      if (d.scheme == Scheme::binary) doc.fail(pl->line, "p_L does not apply to binary domains");
      if (!(v > 0.0 && v < 1.0)) doc.fail(pl->line, "p_L must lie in (0, 1)");
    }
    for (const auto& e : s.entries) {
      if (e.key != "role" && e.key != "scheme" && e.key != "data" && e.key != "pi1" && e.key != "p_L") {
        doc.fail(e.line, "unknown domain key '" + e.key + "'");
      }
    }
    hash_input += "\n" + d.id + "=" + fnv1a_hex(read_file_text(d.data));
    m.domains.push_back(std::move(d));
  }
  const auto targets = std::count_if(m.domains.begin(), m.domains.end(), [](const auto& d) { return d.target; });
  if (targets != 1) doc.fail(1, "manifest needs exactly one target domain, found " + std::to_string(targets));
  auto t = std::find_if(m.domains.begin(), m.domains.end(), [](const auto& d) { return d.target; });
  if (t->scheme != Scheme::pu) doc.fail(t->line, "target domain must use the pu scheme");
  std::rotate(m.domains.begin(), t, t + 1);
  m.hash = fnv1a_hex(hash_input);
  return m;
}

DomainDataset to_dataset(const ManifestDomain& d, const LabeledTable& t, Eigen::MatrixXd x, bool intercept) {
  const std::string where = d.data.string();
  const auto need = [&](bool has, const char* col) {
    if (!has) throw DataError(where + ":1: " + std::string(to_string(d.scheme)) + " data needs a '" + col + "' column");
  };
  const auto complete = [&](const std::vector<std::optional<int>>& v, const char* col) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i]) throw DataError(where + ": row " + std::to_string(i + 1) + ": missing '" + col + "'");
      out.push_back(*v[i]);
    }
    return out;
  };
  switch (d.scheme) {
    case Scheme::binary:
      need(t.has_y, "y");
      return DomainDataset::binary(d.id, std::move(x), complete(t.y, "y"), d.pi1, intercept);
    case Scheme::pu:
      need(t.has_z, "z");
      return DomainDataset::pu(d.id, std::move(x), complete(t.z, "z"), d.pi1, intercept);
    case Scheme::semi: {
      need(t.has_z, "z");
      need(t.has_y, "y");
      std::vector<int> z = complete(t.z, "z");
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] == 1 && !t.y[i]) throw DataError(where + ": row " + std::to_string(i + 1) + ": labeled row needs y");
        if (z[i] == 0 && t.y[i]) throw DataError(where + ": row " + std::to_string(i + 1) + ": y must be empty where z = 0");
      }
      return DomainDataset::semi(d.id, std::move(x), std::move(z), t.y, d.pi1, intercept);
    }
  }
  throw DataError("unknown scheme");
}

Eigen::MatrixXd add_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd with(x.rows(), x.cols() + 1);
  with.col(0).setOnes();
  with.rightCols(x.cols()) = x;
  return with;
}

int cmd_fit(const fs::path& manifest_path, const fs::path& out_dir, bool standardize_flag, int threads,
            std::ostream& out) {
  const Manifest man = read_manifest(manifest_path);
  std::vector<LabeledTable> tables;
  for (const auto& d : man.domains) {
    tables.push_back(read_labeled_csv(d.data, tables.empty() ? std::vector<std::string>{} : tables[0].features));
    if (tables.size() > 1) {
      // Same feature set, in the same order, as the target file.
      const LabeledTable probe = read_labeled_csv(d.data);
      if (probe.features != tables[0].features) {
        throw DataError(d.data.string() + ":1: feature columns differ from the target's");
      }
    }
  }
  Model model;
  model.config_hash = man.hash;
  model.seed = man.seed;
  model.threshold = man.threshold;
  model.features = tables[0].features;
  model.intercept = man.intercept;
  model.standardize = man.standardize || standardize_flag;
  if (model.standardize) {
    const Eigen::MatrixXd& tx = tables[0].x;
    model.center = tx.colwise().mean().transpose();
    model.scale.resize(tx.cols());
    for (Eigen::Index j = 0; j < tx.cols(); ++j) {
      const double var = (tx.col(j).array() - model.center[j]).square().sum() /
                         std::max<double>(1.0, static_cast<double>(tx.rows() - 1));
      model.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  std::vector<DomainDataset> domains;
  for (std::size_t k = 0; k < man.domains.size(); ++k) {
    Eigen::MatrixXd x = tables[k].x;
    if (model.standardize) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = (x.col(j).array() - model.center[j]) / model.scale[j];
    }
    if (man.intercept) x = add_intercept(x);
    domains.push_back(to_dataset(man.domains[k], tables[k], std::move(x), man.intercept));
  }
  const DomainDataset target = domains.front();
  std::vector<DomainDataset> sources(std::make_move_iterator(domains.begin() + 1),
                                     std::make_move_iterator(domains.end()));

  BankOptions opts;
  opts.fit.seed = man.seed;
  opts.l1 = man.l1;
  opts.lambda_grid_size = man.grid_size;
  opts.lambda_ratio = man.grid_ratio;
  opts.lambda_folds = man.folds;
  opts.threads = threads;
  const FoldPlan folds = make_folds(target, man.folds, man.seed);
  const CandidateBank bank = build_bank(target, std::move(sources), folds, opts);
  const WeightVector w = solve_weights(bank, target, folds);

  model.candidate_ids.push_back(target.id());
  model.candidate_coefs.push_back(bank.target_full.beta.beta);
  for (std::size_t m = 0; m < bank.sources.size(); ++m) {
    model.candidate_ids.push_back(bank.source_ids[m]);
    model.candidate_coefs.push_back(bank.sources[m].beta.beta);
  }
  model.weights = w.w;
  model.averaged = averaged_coefficients(w, bank).beta;
  model.cv_value = w.cv_value;
  model.vertex_cv = w.vertex_values;
  model.target_excluded = w.target_excluded;
  save_model(model, out_dir);

  const std::string head = provenance(model.config_hash, model.seed);
  std::string weights_csv = head + "id,weight,vertex_cv\n";
  for (std::size_t m = 0; m < model.candidate_ids.size(); ++m) {
    weights_csv += model.candidate_ids[m] + "," + format_double(model.weights[static_cast<Eigen::Index>(m)]) +
                   "," + format_double(model.vertex_cv[m]) + "\n";
  }
  write_text_file(out_dir / "weights.csv", weights_csv);

  std::string coef_csv = head + "term";
  for (const auto& id : model.candidate_ids) coef_csv += "," + id;
  coef_csv += ",averaged\n";
  std::vector<std::string> terms;
  if (model.intercept) terms.emplace_back("(intercept)");
  terms.insert(terms.end(), model.features.begin(), model.features.end());
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    coef_csv += terms[j];
    for (const auto& c : model.candidate_coefs) coef_csv += "," + format_double(c[jj]);
    coef_csv += "," + format_double(model.averaged[jj]) + "\n";
  }
  write_text_file(out_dir / "coefficients.csv", coef_csv);
  out << "fitted " << model.candidate_ids.size() << " candidates; cv = " << format_double(model.cv_value) << "\n";
  return kExitOk;
}

CoefficientVector averaged_of(const Model& m) { return {m.averaged, m.intercept}; }

int cmd_predict(const fs::path& model_dir, const fs::path& data, const fs::path& out_file) {
  const Model m = load_model(model_dir);
  const LabeledTable t = read_labeled_csv(data, m.features);
  const Eigen::VectorXd p = predict_proba_rows(averaged_of(m), m.design(t.x));
  std::string text = provenance(m.config_hash, m.seed) + "row,probability\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) text += std::to_string(i + 1) + "," + format_double(p[i]) + "\n";
  write_text_file(out_file, text);
  return kExitOk;
}

int cmd_evaluate(const fs::path& model_dir, const fs::path& test, double pi1, std::optional<double> threshold,
                 const fs::path& out_file) {
  const Model m = load_model(model_dir);
  const LabeledTable t = read_labeled_csv(test, m.features);
  if (!t.has_y && !t.has_z) throw DataError(test.string() + ":1: test data needs a 'y' or 'z' column");
  const Eigen::MatrixXd x = m.design(t.x);
  const CoefficientVector beta = averaged_of(m);
  const Eigen::VectorXd p = predict_proba_rows(beta, x);
  const std::span<const double> s(p.data(), static_cast<std::size_t>(p.size()));
  const auto complete = [&test](const std::vector<std::optional<int>>& v, const char* col) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i]) throw DataError(test.string() + ": row " + std::to_string(i + 1) + ": missing '" + col + "'");
      out.push_back(*v[i]);
    }
    return out;
  };
  EvalReport r;
  r.n_test = x.rows();
  r.threshold = threshold.value_or(m.threshold);
  if (t.has_y) {
    const std::vector<int> y = complete(t.y, "y");
    const ConfusionRates rates = confusion_metrics(s, y, r.threshold);
    r.acc = rates.acc;
    r.tpr = rates.tpr;
    r.fpr = rates.fpr;
    r.auc = auc(s, y);
  }
  if (t.has_z) {
    const std::vector<int> z = complete(t.z, "z");
    r.auc_adj = auc_adj(s, z, pi1);
    const DomainDataset pu = DomainDataset::pu("test", x, z, pi1, m.intercept);
    FitOptions fo;
    fo.seed = m.seed;
    r.rkl = rkl(beta, pu, constants_for(pu).b, fo);
  }
  KvWriter w;
  w.comment("config_hash=" + m.config_hash + " seed=" + std::to_string(m.seed));
  w.put("n_test", static_cast<long>(r.n_test));
  w.put("threshold", r.threshold);
  w.put("pi1", pi1);
  w.put("acc", r.acc);
  w.put("auc", r.auc);
  w.put("auc_adj", r.auc_adj);
  w.put("tpr", r.tpr);
  w.put("fpr", r.fpr);
  w.put("rkl", r.rkl);
  write_text_file(out_file, w.str());
  return kExitOk;
}

int cmd_weights(const fs::path& model_dir, std::ostream& out) {
  const Model m = load_model(model_dir);
  out << provenance(m.config_hash, m.seed);
  out << "id,weight,vertex_cv\n";
  for (std::size_t k = 0; k < m.candidate_ids.size(); ++k) {
    out << m.candidate_ids[k] << "," << format_double(m.weights[static_cast<Eigen::Index>(k)]) << ","
        << format_double(m.vertex_cv[k]) << "\n";
  }
  out << "cv_value," << format_double(m.cv_value) << ",\n";
  if (m.target_excluded) out << "# target excluded: a fold refit failed\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string case_name;
  std::vector<int> n;
  std::vector<double> pl;
  int reps = 0;
  std::uint64_t seed = 1;
  fs::path out;
  int threads = 1;
  double threshold = 0.5;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  CaseConfig cfg = case_preset(a.case_name);
  if (!a.n.empty()) cfg.n_grid = a.n;
  if (!a.pl.empty()) cfg.pl_grid = a.pl;
  if (a.reps > 0) cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.bank.fit.seed = a.seed;
  cfg.threshold = a.threshold;
  cfg.threads = a.threads;
  cfg.validate();
  const std::string hash = fnv1a_hex(cfg.canonical());
  const CaseRun run = run_case(cfg);
  fs::create_directories(a.out);
  const std::string head = provenance(hash, cfg.seed);

  std::string reps = head + "n,p_L,rep,ok,method,acc,auc,auc_adj,tpr,fpr,rkl\n";
  std::string diag = head + "n,p_L,rep,ok,cv_value,cv_uniform,uninformative_weight,kl_ratio";
  std::vector<std::string> ids{cfg.target.id};
  for (const auto& s : cfg.sources) ids.push_back(s.id);
  for (const auto& id : ids) diag += ",w_" + id;
  diag += "\n";
  std::string failures = head;
  for (const auto& r : run.reports) {
    const std::string key = std::to_string(r.n) + "," + format_double(r.p_L) + "," + std::to_string(r.rep) + "," +
                            (r.ok ? "1" : "0");
    for (Method m : kMethods) {
      const EvalReport& e = r.of(m);
      reps += key + "," + std::string(to_string(m)) + "," + format_double(e.acc) + "," + format_double(e.auc) +
              "," + format_double(e.auc_adj) + "," + format_double(e.tpr) + "," + format_double(e.fpr) + "," +
              format_double(e.rkl) + "\n";
    }
    diag += key + "," + format_double(r.cv_value) + "," + format_double(r.cv_uniform) + "," +
            format_double(r.uninformative_weight) + "," + format_double(r.kl_ratio);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const bool have = static_cast<std::size_t>(r.weights.size()) == ids.size();
      diag += "," + format_double(have ? r.weights[static_cast<Eigen::Index>(k)] : kMissing);
    }
    diag += "\n";
    if (!r.ok) {
      failures += "n=" + std::to_string(r.n) + " p_L=" + format_double(r.p_L) + " rep=" + std::to_string(r.rep) +
                  ": " + r.error + "\n";
    }
  }
  std::string summary = head + "n,p_L,method,metric,count,median,q1,q3\n";
  for (const auto& s : summarize(run)) {
    summary += std::to_string(s.n) + "," + format_double(s.p_L) + "," + s.method + "," + s.metric + "," +
               std::to_string(s.count) + "," + format_double(s.median) + "," + format_double(s.q1) + "," +
               format_double(s.q3) + "\n";
  }
  write_text_file(a.out / "replications.csv", reps);
  write_text_file(a.out / "diagnostics.csv", diag);
  write_text_file(a.out / "summary.csv", summary);
  write_text_file(a.out / "failures.txt", failures);
  out << "case " << cfg.name << ": " << run.reports.size() << " replications, " << run.failures << " failed\n";
  if (run.batch_failed) throw NumericalError("more than 10% of replications failed");
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer learning by model averaging for positive-unlabeled targets", "putl"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (also PUTL_THREADS)")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a simulation case");
  simulate->add_option("--case", sim.case_name, "1, 2, 3 or hd")->required();
  simulate->add_option("--n", sim.n, "target sample sizes")->delimiter(',');
  simulate->add_option("--pl", sim.pl, "labeled fractions")->delimiter(',');
  simulate->add_option("--reps", sim.reps, "replications per cell");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--threshold", sim.threshold, "classification threshold");
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  fs::path manifest, model_dir, data, out_path;
  bool standardize = false;
  auto* fit = app.add_subcommand("fit", "fit all domains and solve the weights");
  fit->add_option("--manifest", manifest, "manifest file")->required();
  fit->add_option("--out", out_path, "model directory")->required();
  fit->add_flag("--standardize", standardize, "z-score features with target statistics");
  fit->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "averaged probabilities per row");
  predict->add_option("--model", model_dir, "model directory")->required();
  predict->add_option("--data", data, "covariate CSV")->required();
  predict->add_option("--out", out_path, "output CSV")->required();

  double pi1 = 0.0;
  std::optional<double> threshold;
  auto* evaluate = app.add_subcommand("evaluate", "metrics on a labeled or PU test file");
  evaluate->add_option("--model", model_dir, "model directory")->required();
  evaluate->add_option("--test", data, "test CSV with y and/or z")->required();
  evaluate->add_option("--pi1", pi1, "target class prior")->required();
  evaluate->add_option("--threshold", threshold, "classification threshold");
  evaluate->add_option("--out", out_path, "report file")->required();

  auto* weights = app.add_subcommand("weights", "print the weight allocation");
  weights->add_option("--model", model_dir, "model directory")->required();

  std::vector<const char*> argv{"putl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      sim.threads = threads;
      return cmd_simulate(sim, out);
    }
    if (*fit) return cmd_fit(manifest, out_path, standardize, threads, out);
    if (*predict) return cmd_predict(model_dir, data, out_path);
    if (*evaluate) return cmd_evaluate(model_dir, data, pi1, threshold, out_path);
    if (*weights) return cmd_weights(model_dir, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace putl::cli
