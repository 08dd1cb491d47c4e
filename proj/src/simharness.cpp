#include "putl/simharness.hpp"

#include "putl/error.hpp"
#include "putl/links.hpp"
#include "putl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace putl {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Eigen::VectorXd named_beta(int which, int p) {
  if (p < 6) throw DataError("named coefficient vectors need p >= 6");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  switch (which) {
    case 1:
      beta.head(5).setOnes();
      break;
    case 2:
      for (int j = 1; j < p; j += 2) beta[j] = 1.0;
      break;
    case 3:
      beta.head(5).setOnes();
      beta[p - 1] = 0.5;
      break;
    case 4:
      beta[0] = beta[2] = beta[4] = 1.0;
      break;
    case 5:
      beta.tail(5).setOnes();
      break;
    default:
      throw DataError("named coefficient vectors are numbered 1 to 5");
  }
  return beta;
}

void DgpSpec::validate() const {
  if (p < 1) throw DataError("DGP dimension must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw DataError("AR(1) correlation must lie in (-1, 1)");
  if (beta_true.size() != p) throw DataError("beta_true length must equal p");
  if (population_size < 1) throw DataError("population size must be positive");
}

Eigen::MatrixXd ar1_covariance(int p, double rho) {
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
  }
  return sigma;
}

Population generate_population(const DgpSpec& dgp, std::uint64_t seed) {
  dgp.validate();
  const Eigen::LLT<Eigen::MatrixXd> chol(ar1_covariance(dgp.p, dgp.rho));
  if (chol.info() != Eigen::Success) throw NumericalError("AR(1) covariance is not positive definite");
  const Eigen::MatrixXd lower = chol.matrixL();

  Rng rng = make_rng(seed, {0x90bULL});
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Eigen::MatrixXd white(dgp.population_size, dgp.p);
  for (Eigen::Index i = 0; i < white.rows(); ++i) {
    for (Eigen::Index j = 0; j < white.cols(); ++j) white(i, j) = normal(rng);
  }
  Population pop;
  pop.x = white * lower.transpose();
  const Eigen::VectorXd eta = pop.x * dgp.beta_true;
  pop.y.resize(static_cast<std::size_t>(dgp.population_size));
  long positives = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double prob = dgp.link == Link::logit ? sigmoid(eta[i]) : normal_cdf(eta[i]);
    const int y = uniform(rng) < prob ? 1 : 0;
    pop.y[static_cast<std::size_t>(i)] = y;
    positives += y;
  }
  pop.pi1 = static_cast<double>(positives) / static_cast<double>(dgp.population_size);
  return pop;
}

PopulationSampler::PopulationSampler(const Population& pop)
    : pop_(&pop), taken_(pop.y.size(), 0), remaining_(static_cast<long>(pop.y.size())) {}

std::vector<Eigen::Index> PopulationSampler::take(std::vector<Eigen::Index>& pool, long count,
                                                  Rng& rng) {
  if (count > static_cast<long>(pool.size())) {
    throw DataError("population exhausted: requested " + std::to_string(count) + " rows, " +
                    std::to_string(pool.size()) + " available");
  }
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  for (long k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
  }
  std::vector<Eigen::Index> out(pool.begin(), pool.begin() + count);
  for (auto r : out) taken_[static_cast<std::size_t>(r)] = 1;
  remaining_ -= count;
  return out;
}

Draw PopulationSampler::draw(Scheme scheme, int n, double p_L, Rng& rng) {
  if (n < 1) throw DataError("domain sample size must be positive");
  const auto free_rows = [this](bool positives_only) {
    std::vector<Eigen::Index> pool;
    for (std::size_t i = 0; i < taken_.size(); ++i) {
      if (!taken_[i] && (!positives_only || pop_->y[i] == 1)) pool.push_back(static_cast<Eigen::Index>(i));
    }
    return pool;
  };
  const long labeled = std::lround(static_cast<double>(n) * p_L);
  if (scheme != Scheme::binary && !(p_L > 0.0 && p_L < 1.0)) {
    throw DataError("p_L must lie in (0, 1) for incomplete label schemes");
  }
  Draw d;
  d.scheme = scheme;
  switch (scheme) {
    case Scheme::binary: {
      auto pool = free_rows(false);
      d.rows = take(pool, n, rng);
      break;
    }
    case Scheme::pu: {
      auto positives = free_rows(true);
      if (labeled > static_cast<long>(positives.size())) {
        throw DataError("n_L = " + std::to_string(labeled) + " exceeds the " +
                        std::to_string(positives.size()) + " available positives");
      }
      d.rows = take(positives, labeled, rng);
      auto rest = free_rows(false);
      auto unlabeled = take(rest, n - labeled, rng);
      d.rows.insert(d.rows.end(), unlabeled.begin(), unlabeled.end());
      d.z.assign(static_cast<std::size_t>(n), 0);
      std::fill(d.z.begin(), d.z.begin() + labeled, 1);
      break;
    }
    case Scheme::semi: {
      auto pool = free_rows(false);
      d.rows = take(pool, n, rng);
      std::vector<std::size_t> order(static_cast<std::size_t>(n));
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::shuffle(order.begin(), order.end(), rng);
      d.z.assign(static_cast<std::size_t>(n), 0);
      for (long k = 0; k < labeled; ++k) d.z[order[static_cast<std::size_t>(k)]] = 1;
      break;
    }
  }
  return d;
}

DomainDataset materialize(const Population& pop, const Draw& draw, std::string id,
                          bool drop_last_covariate) {
  const auto n = static_cast<Eigen::Index>(draw.rows.size());
  const Eigen::Index p = pop.x.cols() - (drop_last_covariate ? 1 : 0);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index k = 0; k < n; ++k) x.row(k) = pop.x.row(draw.rows[static_cast<std::size_t>(k)]).head(p);
  const std::vector<int> y = true_labels(pop, draw);
  switch (draw.scheme) {
    case Scheme::binary:
      return DomainDataset::binary(std::move(id), std::move(x), y, pop.pi1);
    case Scheme::pu:
      return DomainDataset::pu(std::move(id), std::move(x), draw.z, pop.pi1);
    case Scheme::semi: {
      std::vector<std::optional<int>> kept(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (draw.z[i] == 1) kept[i] = y[i];
      }
      return DomainDataset::semi(std::move(id), std::move(x), draw.z, std::move(kept), pop.pi1);
    }
  }
  throw DataError("unknown scheme");
}

std::vector<int> true_labels(const Population& pop, const Draw& draw) {
  std::vector<int> y;
  y.reserve(draw.rows.size());
  for (auto r : draw.rows) y.push_back(pop.y[static_cast<std::size_t>(r)]);
  return y;
}

DomainDataset sample_domain(PopulationSampler& sampler, const DomainSpec& spec, int n, double p_L,
                            std::uint64_t seed) {
  Rng rng = make_rng(seed, {0xd0ULL});
  const Draw d = sampler.draw(spec.scheme, spec.n > 0 ? spec.n : n, p_L, rng);
  return materialize(sampler.population(), d, spec.id, spec.drop_last_covariate);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::single_pu:
      return "Single-PU";
    case Method::oracle:
      return "Oracle";
    case Method::equal_weighted:
      return "Equal-Weighted";
    case Method::tlma_pu:
      return "TLMA-PU";
  }
  return "?";
}

void CaseConfig::validate() const {
  if (populations.empty()) throw DataError("case needs at least one population");
  for (const auto& dgp : populations) dgp.validate();
  const auto check_domain = [this](const DomainSpec& d) {
    if (d.population < 0 || d.population >= static_cast<int>(populations.size())) {
      throw DataError("domain '" + d.id + "' refers to a missing population");
    }
  };
  check_domain(target);
  if (target.scheme != Scheme::pu) throw DataError("target domain must use the PU scheme");
  for (const auto& s : sources) check_domain(s);
  if (n_grid.empty() || pl_grid.empty()) throw DataError("n and p_L grids must be nonempty");
  if (reps < 1) throw DataError("need at least one replication");
  if (folds < 2) throw DataError("need at least 2 folds");
  if (n_test < 2) throw DataError("test size too small");
  bank.fit.validate();
}

std::string CaseConfig::canonical() const {
  std::ostringstream s;
  s.precision(17);
  s << "case=" << name << ";reps=" << reps << ";seed=" << seed << ";K=" << folds
    << ";n_test=" << n_test << ";n_kl=" << n_kl
    << ";threshold=" << threshold << ";oracle=" << (oracle_link == Link::logit ? "logit" : "probit")
    << ";kl=" << kl_diagnostic << ";rkl=" << compute_rkl << ";l1=" << bank.l1
    << ";grid=" << bank.lambda_grid_size << "/" << bank.lambda_ratio << "/" << bank.lambda_folds
    << ";fit=" << bank.fit.max_iters << "/" << bank.fit.grad_tol << "/" << bank.fit.n_starts << "/"
    << bank.fit.start_sd << "/" << bank.fit.seed << ";n=";
  for (int n : n_grid) s << n << ",";
  s << ";pl=";
  for (double pl : pl_grid) s << pl << ",";
  for (const auto& dgp : populations) {
    s << ";pop(p=" << dgp.p << ",rho=" << dgp.rho << ",link=" << static_cast<int>(dgp.link)
      << ",size=" << dgp.population_size << ",beta=";
    for (Eigen::Index j = 0; j < dgp.beta_true.size(); ++j) s << dgp.beta_true[j] << ",";
    s << ")";
  }
  const auto domain = [&s](const DomainSpec& d) {
    s << ";dom(" << d.id << "," << to_string(d.scheme) << "," << d.population << "," << d.n << ","
      << d.drop_last_covariate << ")";
  };
  domain(target);
  for (const auto& d : sources) domain(d);
  s << ";uninformative=";
  for (const auto& u : uninformative) s << u << ",";
  return s.str();
}

namespace {

DgpSpec dgp(int which, int p, Link link, int size = 100000) {
  DgpSpec d;
  d.p = p;
  d.link = link;
  d.beta_true = named_beta(which, p);
  d.population_size = size;
  return d;
}

DomainSpec domain(std::string id, Scheme scheme, int population, bool drop = false, int n = 0) {
  return DomainSpec{std::move(id), scheme, population, n, drop};
}

// Ten domains: binary 1-3, PU 4-6 and target, semi-supervised 7-9. Domains
// 0, 1, 4, 7 share beta_1; 2, 5, 8 use beta_4; 3, 6, 9 use beta_5.
CaseConfig case_two_like(std::string name, Link link) {
  CaseConfig c;
  c.name = std::move(name);
  c.populations = {dgp(1, 10, link), dgp(4, 10, link), dgp(5, 10, link)};
  c.target = domain("target", Scheme::pu, 0);
  const Scheme schemes[] = {Scheme::binary, Scheme::pu, Scheme::semi};
  int m = 1;
  for (Scheme scheme : schemes) {
    for (int pop = 0; pop < 3; ++pop, ++m) {
      c.sources.push_back(domain("m" + std::to_string(m), scheme, pop));
      if (pop != 0) c.uninformative.push_back("m" + std::to_string(m));
    }
  }
  c.oracle_link = link;
  return c;
}

}  // namespace

CaseConfig case_preset(std::string_view name) {
  if (name == "1") {
    // Seven domains; every candidate model omits the last covariate.
    CaseConfig c;
    c.name = "1";
    c.populations = {dgp(1, 10, Link::logit), dgp(2, 10, Link::logit), dgp(3, 10, Link::logit)};
    c.target = domain("target", Scheme::pu, 2, true);
    c.sources = {domain("m1", Scheme::binary, 0, true), domain("m2", Scheme::binary, 1, true),
                 domain("m3", Scheme::pu, 0, true),     domain("m4", Scheme::pu, 1, true),
                 domain("m5", Scheme::semi, 0, true),   domain("m6", Scheme::semi, 1, true)};
    c.uninformative = {"m2", "m4", "m6"};
    c.kl_diagnostic = true;
    return c;
  }
  if (name == "2") return case_two_like("2", Link::logit);
  if (name == "3") return case_two_like("3", Link::probit);
  if (name == "hd") {
    CaseConfig c;
    c.name = "hd";
    // 400 x 10^4 doubles keeps the population around 32 MB.
    c.populations = {dgp(1, 400, Link::logit, 10000)};
    c.target = domain("target", Scheme::pu, 0, false, 0);
    c.sources = {domain("m1", Scheme::binary, 0, false, 1000)};
    c.n_grid = {200};
    c.pl_grid = {0.3};
    c.reps = 10;
    c.compute_rkl = false;
    c.bank.l1 = true;
    return c;
  }
  throw DataError("unknown case '" + std::string(name) + "' (expected 1, 2, 3 or hd)");
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, int n, double p_L, int rep, std::uint64_t purpose) {
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(std::llround(p_L * 1e6)),
                            static_cast<std::uint64_t>(rep), purpose});
  return rng();
}

EvalReport evaluate_scores(const Eigen::VectorXd& scores, const ReplicationContext& ctx) {
  EvalReport r;
  r.threshold = ctx.cfg->threshold;
  r.n_test = ctx.test->rows();
  const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
  const auto rates = confusion_metrics(s, ctx.test_y, r.threshold);
  r.acc = rates.acc;
  r.tpr = rates.tpr;
  r.fpr = rates.fpr;
  if (std::find(ctx.test_y.begin(), ctx.test_y.end(), 0) != ctx.test_y.end() &&
      std::find(ctx.test_y.begin(), ctx.test_y.end(), 1) != ctx.test_y.end()) {
    r.auc = auc(s, ctx.test_y);
  }
  r.auc_adj = auc_adj(s, ctx.test->indicator(), ctx.test->pi1());
  return r;
}

EvalReport evaluate_logit(const CoefficientVector& beta, const ReplicationContext& ctx) {
  EvalReport r = evaluate_scores(predict_proba_rows(beta, ctx.test->features()), ctx);
  if (ctx.rkl) r.rkl = (*ctx.rkl)(beta);
  return r;
}

}  // namespace

namespace {

// log Phi(x) and phi(x) / Phi(x), stable far into the lower tail.
double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / (x * x));
}

double inverse_mills(double x) {
  if (x > -30.0) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return pdf / normal_cdf(x);
  }
  const double inv2 = 1.0 / (x * x);
  return -x / (1.0 - inv2 + 3.0 * inv2 * inv2);
}

}  // namespace

FitResult fit_probit(const DomainDataset& data, const FitOptions& opts) {
  if (data.scheme() != Scheme::binary) throw DataError("probit fit needs binary labels");
  const auto& y = std::get<BinaryLabels>(data.labels()).y;
  const Eigen::MatrixXd& x = data.features();
  const auto n = static_cast<double>(data.rows());
  const optim::SmoothFn fn = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& grad) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd score(eta.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double sign = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      total += log_normal_cdf(sign * eta[i]);
      score[i] = sign * inverse_mills(sign * eta[i]);
    }
    grad = -(x.transpose() * score) / n;
    return -total / n;
  };
  return fit_smooth(fn, x.cols(), data.has_intercept(), opts);
}

std::unique_ptr<ReplicationContext> build_context(const CaseConfig& cfg, int n, double p_L,
                                                  int rep) {
  auto ctx = std::make_unique<ReplicationContext>();
  ctx->cfg = &cfg;
  std::vector<Population> pops;
  pops.reserve(cfg.populations.size());
  for (std::size_t k = 0; k < cfg.populations.size(); ++k) {
    pops.push_back(generate_population(cfg.populations[k], stream_seed(cfg.seed, n, p_L, rep, 100 + k)));
  }
  std::vector<PopulationSampler> samplers;
  samplers.reserve(pops.size());
  for (const auto& pop : pops) samplers.emplace_back(pop);

  const auto& tspec = cfg.target;
  const Population& tpop = pops[static_cast<std::size_t>(tspec.population)];
  PopulationSampler& tsampler = samplers[static_cast<std::size_t>(tspec.population)];
  {
    Rng rng = make_rng(stream_seed(cfg.seed, n, p_L, rep, 1));
    const Draw d = tsampler.draw(Scheme::pu, tspec.n > 0 ? tspec.n : n, p_L, rng);
    ctx->target = std::make_unique<DomainDataset>(
        materialize(tpop, d, tspec.id, tspec.drop_last_covariate));
    ctx->target_all_features = materialize(tpop, d, tspec.id, false).features();
    ctx->target_y = true_labels(tpop, d);
  }
  for (std::size_t m = 0; m < cfg.sources.size(); ++m) {
    const auto& spec = cfg.sources[m];
    ctx->sources.push_back(sample_domain(samplers[static_cast<std::size_t>(spec.population)], spec,
                                         n, p_L, stream_seed(cfg.seed, n, p_L, rep, 200 + m)));
  }
  {
    Rng rng = make_rng(stream_seed(cfg.seed, n, p_L, rep, 2));
    const Draw d = tsampler.draw(Scheme::pu, cfg.n_test, p_L, rng);
    ctx->test = std::make_unique<DomainDataset>(
        materialize(tpop, d, "test", tspec.drop_last_covariate));
    ctx->test_all_features = materialize(tpop, d, "test", false).features();
    ctx->test_y = true_labels(tpop, d);
    ctx->test_b = constants_for(*ctx->test).b;
  }
  if (cfg.kl_diagnostic) {
    Rng rng = make_rng(stream_seed(cfg.seed, n, p_L, rep, 3));
    // eta* is the true linear predictor on every covariate, so KL-hat(w)
    // estimates the divergence from the true labeling distribution.
    const Draw eval = tsampler.draw(Scheme::pu, cfg.n_kl, p_L, rng);
    const DomainDataset rows = materialize(tpop, eval, "kl", tspec.drop_last_covariate);
    ctx->kl_rows = rows.features();
    ctx->kl_z = rows.indicator();
    ctx->kl_b = constants_for(rows).b;
    ctx->kl_eta = materialize(tpop, eval, "kl", false).features() *
                  cfg.populations[static_cast<std::size_t>(tspec.population)].beta_true;
  }

  ctx->folds = make_folds(*ctx->target, cfg.folds, stream_seed(cfg.seed, n, p_L, rep, 4));
  BankOptions bank_opts = cfg.bank;
  bank_opts.threads = 1;
  ctx->bank = build_bank(*ctx->target, ctx->sources, ctx->folds, bank_opts);
  ctx->weights = solve_weights(ctx->bank, *ctx->target, ctx->folds);
  if (cfg.compute_rkl) {
    ctx->rkl = std::make_unique<RklEvaluator>(*ctx->test, ctx->test_b, cfg.bank.fit);
  }
  return ctx;
}

EvalReport run_baseline(Method method, const ReplicationContext& ctx) {
  const CandidateBank& bank = ctx.bank;
  switch (method) {
    case Method::single_pu:
      return evaluate_logit(bank.target_full.beta, ctx);
    case Method::equal_weighted: {
      const auto m = static_cast<Eigen::Index>(bank.candidates());
      const Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
      return evaluate_logit(averaged_coefficients(w, bank), ctx);
    }
    case Method::tlma_pu:
      return evaluate_logit(averaged_coefficients(ctx.weights.w, bank), ctx);
    case Method::oracle:
      break;
  }
  const CaseConfig& cfg = *ctx.cfg;
  const DomainDataset full = DomainDataset::binary("oracle", ctx.target_all_features, ctx.target_y,
                                                   ctx.target->pi1());
  const bool same_features = ctx.target_all_features.cols() == ctx.target->cols();
  if (cfg.oracle_link == Link::probit) {
    const FitResult fit = fit_probit(full, cfg.bank.fit);
    Eigen::VectorXd scores = ctx.test_all_features * fit.beta.beta;
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = normal_cdf(scores[i]);
    // The PU working likelihood is logit, so RKL does not apply to a probit fit.
    return evaluate_scores(scores, ctx);
  }
  FitResult fit;
  if (cfg.bank.l1) {
    BankOptions opts = cfg.bank;
    fit = fit_source(full, opts);
  } else {
    fit = fit_mle(Objective(full), cfg.bank.fit);
  }
  EvalReport r = evaluate_scores(predict_proba_rows(fit.beta, ctx.test_all_features), ctx);
  if (ctx.rkl && same_features) r.rkl = (*ctx.rkl)(fit.beta);
  return r;
}

ReplicationReport run_replication(const CaseConfig& cfg, int n, double p_L, int rep) {
  ReplicationReport report;
  report.n = n;
  report.p_L = p_L;
  report.rep = rep;
  try {
    const auto ctx = build_context(cfg, n, p_L, rep);
    for (Method m : kMethods) report.methods[static_cast<int>(m)] = run_baseline(m, *ctx);
    const CandidateBank& bank = ctx->bank;
    report.candidate_ids.push_back(cfg.target.id);
    for (const auto& id : bank.source_ids) report.candidate_ids.push_back(id);
    report.weights = ctx->weights.w;
    report.cv_value = ctx->weights.cv_value;
    const SimplexObjective cv = cv_objective(bank, *ctx->target, ctx->folds);
    const auto m = static_cast<Eigen::Index>(bank.candidates());
    report.cv_uniform = cv.value(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)));
    if (!cfg.uninformative.empty()) {
      double mass = 0.0;
      for (std::size_t k = 0; k < bank.source_ids.size(); ++k) {
        if (std::find(cfg.uninformative.begin(), cfg.uninformative.end(), bank.source_ids[k]) !=
            cfg.uninformative.end()) {
          mass += report.weights[static_cast<Eigen::Index>(k + 1)];
        }
      }
      report.uninformative_weight = mass;
    }
    if (cfg.kl_diagnostic) {
      const SimplexObjective kl = kl_objective(bank, ctx->kl_eta, ctx->kl_rows, ctx->kl_z, ctx->kl_b);
      report.kl_ratio = kl_ratio(report.weights, kl).ratio;
    }
  } catch (const std::exception& e) {
    report.ok = false;
    report.error = e.what();
  }
  return report;
}

CaseRun run_case(const CaseConfig& cfg) {
  cfg.validate();
  struct Task {
    int n;
    double p_L;
    int rep;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_grid) {
    for (double pl : cfg.pl_grid) {
      for (int r = 0; r < cfg.reps; ++r) tasks.push_back({n, pl, r});
    }
  }
  CaseRun run;
  run.reports.resize(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t k) {
    run.reports[k] = run_replication(cfg, tasks[k].n, tasks[k].p_L, tasks[k].rep);
  });
  for (const auto& r : run.reports) run.failures += r.ok ? 0 : 1;
  run.batch_failed = static_cast<double>(run.failures) > 0.1 * static_cast<double>(tasks.size());
  return run;
}

double quantile(std::vector<double> values, double q) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<SummaryRow> summarize(const CaseRun& run) {
  struct Metric {
    const char* name;
    double (*get)(const EvalReport&);
  };
  static constexpr Metric metrics[] = {
      {"acc", [](const EvalReport& r) { return r.acc; }},
      {"auc", [](const EvalReport& r) { return r.auc; }},
      {"auc_adj", [](const EvalReport& r) { return r.auc_adj; }},
      {"tpr", [](const EvalReport& r) { return r.tpr; }},
      {"fpr", [](const EvalReport& r) { return r.fpr; }},
      {"rkl", [](const EvalReport& r) { return r.rkl; }},
  };
  std::vector<std::pair<int, double>> cells;
  for (const auto& r : run.reports) {
    if (std::find(cells.begin(), cells.end(), std::make_pair(r.n, r.p_L)) == cells.end()) {
      cells.emplace_back(r.n, r.p_L);
    }
  }
  std::vector<SummaryRow> rows;
  const auto add = [&rows](int n, double pl, std::string method, std::string metric,
                           const std::vector<double>& values) {
    SummaryRow row;
    row.n = n;
    row.p_L = pl;
    row.method = std::move(method);
    row.metric = std::move(metric);
    row.count = std::count_if(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    row.median = median(values);
    row.q1 = quantile(values, 0.25);
    row.q3 = quantile(values, 0.75);
    rows.push_back(std::move(row));
  };
  for (const auto& [n, pl] : cells) {
    const auto collect = [&](auto&& get) {
      std::vector<double> v;
      for (const auto& r : run.reports) {
        if (r.ok && r.n == n && r.p_L == pl) v.push_back(get(r));
      }
      return v;
    };
    for (Method m : kMethods) {
      for (const auto& metric : metrics) {
        add(n, pl, std::string(to_string(m)), metric.name,
            collect([&](const ReplicationReport& r) { return metric.get(r.of(m)); }));
      }
    }
    const std::string tlma(to_string(Method::tlma_pu));
    add(n, pl, tlma, "cv_value", collect([](const ReplicationReport& r) { return r.cv_value; }));
    add(n, pl, tlma, "uninformative_weight",
        collect([](const ReplicationReport& r) { return r.uninformative_weight; }));
    add(n, pl, tlma, "kl_ratio", collect([](const ReplicationReport& r) { return r.kl_ratio; }));
  }
  return rows;
}

}  // namespace putl
