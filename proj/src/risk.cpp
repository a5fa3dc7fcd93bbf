#include "riskq/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskq {

namespace {
constexpr double kProbTolerance = 1e-12;
constexpr double kEnumerationGuard = 1e7;
}  // namespace

const char* to_string(Orientation o) {
  return o == Orientation::Minimize ? "minimize" : "maximize";
}

const char* to_string(RiskKind k) {
  switch (k) {
    case RiskKind::Mean: return "mean";
    case RiskKind::WorstMix: return "worstmix";
    case RiskKind::SemiDev: return "semidev";
    case RiskKind::MeanAvar: return "meanavar";
    case RiskKind::Spectral: return "spectral";
  }
  return "mean";
}

Orientation orientation_from_string(const std::string& name) {
  if (name == "minimize") return Orientation::Minimize;
  if (name == "maximize") return Orientation::Maximize;
  throw InputError("unknown orientation: " + name);
}

RiskKind risk_kind_from_string(const std::string& name) {
  if (name == "mean") return RiskKind::Mean;
  if (name == "worstmix") return RiskKind::WorstMix;
  if (name == "semidev") return RiskKind::SemiDev;
  if (name == "meanavar") return RiskKind::MeanAvar;
  if (name == "spectral") return RiskKind::Spectral;
  throw InputError("unknown risk kind: " + name);
}

void RiskConfig::validate() const {
  if (batch_size < 1) throw InputError("RiskConfig: batch_size must be >= 1");
  if (kappa < 0.0 || kappa > 1.0) throw InputError("RiskConfig: kappa must be in [0,1]");
  if (augmented()) {
    if (levels.empty()) throw InputError("RiskConfig: augmented kind needs AVaR levels");
    if (kind == RiskKind::MeanAvar && levels.size() != 1)
      throw InputError("RiskConfig: MeanAvar takes exactly one level");
    if (batch_size != 1) throw InputError("RiskConfig: augmented kinds require batch_size 1");
    double total = 0.0;
    for (const auto& l : levels) {
      if (l.alpha <= 0.0 || l.alpha > 1.0) throw InputError("RiskConfig: alpha must be in (0,1]");
      if (l.weight < 0.0) throw InputError("RiskConfig: level weight must be >= 0");
      total += l.weight;
    }
    if (total > 1.0 + 1e-12) throw InputError("RiskConfig: level weights must sum to <= 1");
  }
}

RiskConfig RiskConfig::mean(int batch, Orientation o) {
  RiskConfig c;
  c.kind = RiskKind::Mean;
  c.batch_size = batch;
  c.orientation = o;
  return c;
}

RiskConfig RiskConfig::worst_mix(double kappa, int batch, Orientation o) {
  RiskConfig c;
  c.kind = RiskKind::WorstMix;
  c.kappa = kappa;
  c.batch_size = batch;
  c.orientation = o;
  return c;
}

RiskConfig RiskConfig::semi_dev(double kappa, int batch, Orientation o) {
  RiskConfig c;
  c.kind = RiskKind::SemiDev;
  c.kappa = kappa;
  c.batch_size = batch;
  c.orientation = o;
  return c;
}

RiskConfig RiskConfig::mean_avar(double kappa, double alpha, Orientation o) {
  RiskConfig c;
  c.kind = RiskKind::MeanAvar;
  c.kappa = kappa;
  c.levels = {{kappa, alpha}};
  c.batch_size = 1;
  c.orientation = o;
  return c;
}

RiskConfig RiskConfig::spectral(std::vector<AvarLevel> levels, Orientation o) {
  RiskConfig c;
  c.kind = RiskKind::Spectral;
  c.levels = std::move(levels);
  c.batch_size = 1;
  c.orientation = o;
  return c;
}

FiniteDistribution FiniteDistribution::make(Eigen::VectorXd prob, Eigen::VectorXd value) {
  if (prob.size() == 0) throw InputError("FiniteDistribution: empty support");
  if (prob.size() != value.size())
    throw InputError("FiniteDistribution: probability/value size mismatch");
  if ((prob.array() < 0.0).any()) throw InputError("FiniteDistribution: negative probability");
  const double total = prob.sum();
  if (std::abs(total - 1.0) > kProbTolerance)
    throw InputError("FiniteDistribution: probabilities sum to " + std::to_string(total));
  FiniteDistribution d;
  d.prob = prob / total;
  d.value = std::move(value);
  return d;
}

namespace {

double aggregate_augmented_min(double value, const Eigen::Ref<const Eigen::VectorXd>& etas,
                               const std::vector<AvarLevel>& levels) {
  double tail = 0.0;
  double out = 0.0;
  for (Eigen::Index j = 0; j < etas.size(); ++j) {
    const auto& l = levels[static_cast<std::size_t>(j)];
    tail += l.weight;
    out += l.weight * etas[j] + (l.weight / l.alpha) * std::max(value - etas[j], 0.0);
  }
  return out + (1.0 - tail) * value;
}

}  // namespace

double aggregate_augmented(double value, const Eigen::Ref<const Eigen::VectorXd>& etas,
                           const RiskConfig& cfg) {
  if (!cfg.augmented()) throw InputError("aggregate_augmented: kind is not augmented");
  if (static_cast<std::size_t>(etas.size()) != cfg.levels.size())
    throw InputError("aggregate_augmented: eta count does not match AVaR levels");
  if (cfg.orientation == Orientation::Minimize)
    return aggregate_augmented_min(value, etas, cfg.levels);
  return -aggregate_augmented_min(-value, -etas, cfg.levels);
}

double avar_discrete(const FiniteDistribution& dist, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) throw InputError("avar_discrete: alpha must be in (0,1]");
  const Eigen::Index n = dist.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return dist.value[a] > dist.value[b]; });
  // Mean of the worst alpha-tail: full atoms from the top, a fractional
  // share of the atom straddling the alpha boundary.
  double remaining = alpha;
  double acc = 0.0;
  for (Eigen::Index i : order) {
    const double take = std::min(dist.prob[i], remaining);
    acc += take * dist.value[i];
    remaining -= take;
    if (remaining <= 0.0) break;
  }
  return acc / alpha;
}

double minibatch_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg) {
  cfg.validate();
  if (cfg.augmented())
    throw InputError("minibatch_risk_exact: augmented kinds have no mini-batch form");
  const int n = cfg.batch_size;
  const Eigen::Index support = dist.size();
  if (std::pow(static_cast<double>(support), n) > kEnumerationGuard)
    throw CapacityError("minibatch_risk_exact: support^N exceeds the enumeration guard");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd batch(n);
  double total = 0.0;
  while (true) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) {
      p *= dist.prob[idx[static_cast<std::size_t>(j)]];
      batch[j] = dist.value[idx[static_cast<std::size_t>(j)]];
    }
    if (p > 0.0) total += p * aggregate(batch, cfg);
    int j = 0;
    for (; j < n; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < support) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j == n) break;
  }
  return total;
}

namespace {

double spectral_min(const FiniteDistribution& dist, const std::vector<AvarLevel>& levels) {
  double tail = 0.0;
  double out = 0.0;
  for (const auto& l : levels) {
    tail += l.weight;
    out += l.weight * avar_discrete(dist, l.alpha);
  }
  return out + (1.0 - tail) * dist.mean();
}

}  // namespace

double spectral_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg) {
  if (!cfg.augmented()) throw InputError("spectral_risk_exact: kind is not augmented");
  cfg.validate();
  if (cfg.orientation == Orientation::Minimize) return spectral_min(dist, cfg.levels);
  FiniteDistribution neg;
  neg.prob = dist.prob;
  neg.value = -dist.value;
  return -spectral_min(neg, cfg.levels);
}

double transition_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg) {
  return cfg.augmented() ? spectral_risk_exact(dist, cfg) : minibatch_risk_exact(dist, cfg);
}

}  // namespace riskq
