#include "riskq/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskq {

namespace {

void compositions(int arms, int capital, Allocation& current, std::vector<Allocation>& out) {
  if (arms == 1) {
    current.push_back(capital);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int take = capital; take >= 0; --take) {
    current.push_back(take);
    compositions(arms - 1, capital - take, current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<Allocation> enumerate_actions(int arms, int capital) {
  if (arms < 1 || capital < 0) throw InputError("enumerate_actions: need arms >= 1, capital >= 0");
  std::vector<Allocation> out;
  Allocation current;
  compositions(arms, capital, current, out);
  return out;
}

NigParams posterior_update(const NigParams& p, double observation) {
  NigParams q;
  q.kappa = p.kappa + 1.0;
  q.mu = (p.kappa * p.mu + observation) / (p.kappa + 1.0);
  q.alpha = p.alpha + 0.5;
  const double innovation = observation - p.mu;
  q.beta = p.beta + p.kappa * innovation * innovation / (2.0 * (p.kappa + 1.0));
  return q;
}

double hypothetical_sigma(const NigParams& p, bool pulled) {
  if (pulled) {
    if (p.alpha <= 0.5) throw InputError("hypothetical_sigma: alpha must exceed 1/2");
    return std::sqrt(p.beta / (p.alpha - 0.5));
  }
  if (p.alpha <= 1.0) throw InputError("hypothetical_sigma: alpha must exceed 1 for unpulled arms");
  return std::sqrt(p.beta / (p.alpha - 1.0));
}

void bandit_features(const std::vector<NigParams>& arms, const Allocation& alloc,
                     Eigen::Ref<Eigen::VectorXd> out) {
  const int n = static_cast<int>(arms.size());
  if (static_cast<int>(alloc.size()) != n)
    throw InputError("bandit_features: allocation size mismatch");
  double sigma_hat[16];
  int order[16];
  if (n > 16) throw CapacityError("bandit_features: more than 16 arms");
  for (int j = 0; j < n; ++j) {
    sigma_hat[j] = hypothetical_sigma(arms[static_cast<std::size_t>(j)],
                                      alloc[static_cast<std::size_t>(j)] > 0);
    order[j] = j;
  }
  std::stable_sort(order, order + n, [&](int a, int b) {
    return arms[static_cast<std::size_t>(a)].mu + 3.0 * sigma_hat[a] >
           arms[static_cast<std::size_t>(b)].mu + 3.0 * sigma_hat[b];
  });
  double payoff = 0.0;
  for (int j = 0; j < n; ++j) {
    out[j] = arms[static_cast<std::size_t>(order[j])].mu;
    out[n + j] = sigma_hat[order[j]];
    payoff += alloc[static_cast<std::size_t>(j)] * arms[static_cast<std::size_t>(j)].mu;
  }
  out[2 * n] = payoff;
}

double sample_rewards(const BanditTask& task, const Allocation& alloc, Rng& rng,
                      std::vector<double>& observations) {
  observations.assign(alloc.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < alloc.size(); ++j) {
    if (alloc[j] <= 0) continue;
    const double r = rng.normal(task.mu[j], task.sigma[j]);
    observations[j] = r;
    total += alloc[j] * r;
  }
  return total;
}

BanditEnv::BanditEnv(int arms, int capital, int horizon, BanditInit init)
    : n_(arms), C_(capital), H_(horizon), init_(init),
      actions_(enumerate_actions(arms, capital)) {
  if (horizon < 1) throw InputError("BanditEnv: horizon must be >= 1");
  if (arms < 1 || arms > 16) throw InputError("BanditEnv: arms must be in [1,16]");
}

void BanditEnv::features(const State& x, int /*h*/, int a,
                         Eigen::Ref<Eigen::VectorXd> out) const {
  bandit_features(x.arms, actions_[static_cast<std::size_t>(a)], out);
}

BanditState BanditEnv::initial_state(Rng& rng) const {
  BanditState s;
  s.task.mu.resize(static_cast<std::size_t>(n_));
  s.task.sigma.resize(static_cast<std::size_t>(n_));
  for (auto& m : s.task.mu) m = rng.uniform(0.3, 0.7);
  for (auto& sd : s.task.sigma) sd = rng.uniform(0.15, 0.25);
  NigParams prior;
  if (init_ == BanditInit::NonInformative) {
    prior = {1.0, 1.0, 2.0, 1.0};
  } else {
    // Centered on the task prior: mean 0.5, posterior-mean sigma 0.2.
    prior = {0.5, 1.0, 2.0, 0.04};
  }
  s.arms.assign(static_cast<std::size_t>(n_), prior);
  return s;
}

void BanditEnv::sample_batch(const State& x, int h, int a, int n, Rng& rng,
                             Batch<State>& out) const {
  const Allocation& alloc = actions_[static_cast<std::size_t>(a)];
  std::vector<double> obs;
  for (int j = 0; j < n; ++j) {
    out.rewards[j] = sample_rewards(x.task, alloc, rng, obs);
    if (h < H_ - 1) {
      State next = x;
      for (std::size_t arm = 0; arm < alloc.size(); ++arm)
        if (alloc[arm] > 0) next.arms[arm] = posterior_update(x.arms[arm], obs[arm]);
      out.next.push_back(std::move(next));
    }
  }
}

}  // namespace riskq
