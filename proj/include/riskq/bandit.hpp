#pragma once

#include <Eigen/Dense>

#include <vector>

#include "riskq/engine.hpp"
#include "riskq/rng.hpp"

namespace riskq {

/// Normal-inverse-gamma hyperparameters of one arm's posterior.
struct NigParams {
  double mu = 0.0;
  double kappa = 1.0;
  double alpha = 2.0;
  double beta = 1.0;
};

/// Hidden per-episode truth: each arm's actual mean and standard deviation.
struct BanditTask {
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Information state carried through an episode. The task rides along as
/// hidden context for reward sampling; features see only the posteriors.
struct BanditState {
  std::vector<NigParams> arms;
  BanditTask task;
};

using Allocation = std::vector<int>;

/// All integer allocations of `capital` over `arms`, first coordinate
/// descending. This enumeration order defines action tie-breaking.
std::vector<Allocation> enumerate_actions(int arms, int capital);

/// Conjugate single-observation update.
NigParams posterior_update(const NigParams& p, double observation);

/// Posterior reward scale used by the feature map: for a pulled arm the
/// hypothetical value after observing its own mean, sqrt(beta/(alpha-1/2));
/// otherwise the current posterior-mean scale sqrt(beta/(alpha-1)).
double hypothetical_sigma(const NigParams& p, bool pulled);

/// Permutation-invariant features: arms reordered by descending
/// mu + 3*sigma_hat, then (means, sigma_hats, expected allocation payoff).
void bandit_features(const std::vector<NigParams>& arms, const Allocation& alloc,
                     Eigen::Ref<Eigen::VectorXd> out);

/// Draws one reward per pulled arm and returns the total payoff
/// sum a_j * R_j; observations[j] holds R_j for pulled arms.
double sample_rewards(const BanditTask& task, const Allocation& alloc, Rng& rng,
                      std::vector<double>& observations);

enum class BanditInit { NonInformative, Centered };

/// Short-horizon Bayesian budget-allocation bandit. Arm truths are
/// resampled every episode (mu ~ U(0.3,0.7), sigma ~ U(0.15,0.25));
/// rewards are Gaussian. Maximization orientation.
class BanditEnv {
 public:
  using State = BanditState;

  BanditEnv(int arms, int capital, int horizon, BanditInit init);

  int horizon() const { return H_; }
  int arms() const { return n_; }
  int capital() const { return C_; }
  const std::vector<Allocation>& actions() const { return actions_; }

  int feature_dim(int) const { return 2 * n_ + 1; }
  int num_actions(const State&, int) const { return static_cast<int>(actions_.size()); }
  void features(const State& x, int h, int a, Eigen::Ref<Eigen::VectorXd> out) const;
  State initial_state(Rng& rng) const;
  void sample_batch(const State& x, int h, int a, int n, Rng& rng, Batch<State>& out) const;
  bool deterministic_rewards() const { return false; }

 private:
  int n_, C_, H_;
  BanditInit init_;
  std::vector<Allocation> actions_;
};

}  // namespace riskq
