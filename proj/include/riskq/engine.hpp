#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "riskq/common.hpp"
#include "riskq/gram.hpp"
#include "riskq/lazy.hpp"
#include "riskq/risk.hpp"
#include "riskq/rng.hpp"

namespace riskq {

// ---------------------------------------------------------------------------
// Environment contract (duck-typed):
//
//   using State = ...;                                  copyable
//   int horizon() const;                                decision stages H
//   int feature_dim(int h) const;                       h in [0, H)
//   int num_actions(const State&, int h) const;         nonempty
//   void features(const State&, int h, int a, Eigen::Ref<Eigen::VectorXd>) const;
//   State initial_state(Rng&) const;
//   void sample_batch(const State&, int h, int a, int n, Rng&, Batch<State>&) const;
//   bool deterministic_rewards() const;
//
// sample_batch fills n conditionally i.i.d. (reward, successor) pairs; at
// the last stage (h == H-1) successors are omitted. All draws must be a
// deterministic function of the Rng sequence.
// ---------------------------------------------------------------------------

template <class State>
struct Batch {
  Eigen::VectorXd rewards;
  std::vector<State> next;

  void reset(int n, bool with_next) {
    rewards.resize(n);
    next.clear();
    if (with_next) next.reserve(static_cast<std::size_t>(n));
  }
};

struct LearnConfig {
  int episodes = 5000;          // K
  double ridge = 0.1;           // lambda
  double beta = 0.1;            // exploration coefficient (constant mode)
  bool beta_schedule = false;   // beta_h = c_beta * d_h * H * sqrt(ln(2 d_h K H / confidence))
  double c_beta = 1.0;
  double confidence = 0.01;
  double p_renew = 0.01;
  bool full_eval = false;       // exact policy evaluation for every record
  bool delta_normalized = false;
  int eta_grid_points = 21;
  int checkpoint_every = 100;
  std::uint64_t seed = 1;
  RiskConfig risk;

  void validate() const {
    risk.validate();
    if (episodes < 1) throw InputError("LearnConfig: episodes must be >= 1");
    if (!(ridge > 0.0)) throw InputError("LearnConfig: ridge must be > 0");
    if (beta < 0.0) throw InputError("LearnConfig: beta must be >= 0");
    if (p_renew < 0.0 || p_renew > 1.0) throw InputError("LearnConfig: p_renew must be in [0,1]");
    if (eta_grid_points < 2 && risk.augmented())
      throw InputError("LearnConfig: eta grid needs at least 2 points");
  }
};

/// Frozen learner output: per-stage weight columns (one per eta-grid node;
/// a single column for the batch aggregators), the Gram snapshot for
/// bonus-aware evaluation, and the native-orientation eta grid.
struct StageWeights {
  struct Stage {
    Eigen::MatrixXd weights;   // d_h x G, native orientation
    Eigen::MatrixXd gram;      // Lambda_h snapshot
    Eigen::MatrixXd eta_grid;  // m x G for augmented kinds, 0x1 otherwise
    double ridge = 0.0;
  };
  Orientation orientation = Orientation::Minimize;
  RiskKind kind = RiskKind::Mean;
  std::vector<Stage> stages;
  int episodes = 0;

  int horizon() const { return static_cast<int>(stages.size()); }
  double stage_cap(int h) const { return static_cast<double>(horizon() - h); }
};

struct Checkpoint {
  int episode;
  std::vector<Eigen::MatrixXd> weights;  // native
};

struct TrainDiagnostics {
  std::vector<double> bonus_sq_sum;    // per stage, selection-time bonuses
  std::vector<double> logdet_sum;      // per stage, sum of ln(1 + bonus^2)
  std::vector<double> phi_sq_max;      // per stage, max |phi|^2 seen
  long renewals = 0;
  long negative_bonus_clamps = 0;
  double train_seconds = 0.0;
};

struct TrainResult {
  StageWeights weights;
  std::vector<Checkpoint> checkpoints;
  std::vector<double> episode_returns;  // native orientation
  TrainDiagnostics diag;
};

/// First-index tie-breaking arg-optimum of a value list.
template <typename Derived>
std::pair<int, double> arg_opt(const Eigen::MatrixBase<Derived>& q, Orientation o) {
  if (q.size() == 0) throw ContractError("arg_opt: empty action list");
  int best = 0;
  double val = q[0];
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    const bool better = o == Orientation::Minimize ? q[i] < val : q[i] > val;
    if (better) {
      best = static_cast<int>(i);
      val = q[i];
    }
  }
  return {best, val};
}

/// Bonus-adjusted Q value clamped to the attainable range [0, stage_cap].
inline double q_value(const Eigen::Ref<const Eigen::VectorXd>& w, const GramState<double>& gram,
                      const Eigen::Ref<const Eigen::VectorXd>& phi, double beta,
                      Orientation orientation, double stage_cap) {
  const double lin = w.dot(phi);
  const double b = gram.bonus(phi);
  const double v = orientation == Orientation::Minimize ? lin - beta * b : lin + beta * b;
  return std::clamp(v, 0.0, stage_cap);
}

template <class Env>
class Learner;

template <class Env>
struct EpisodeInfo {
  struct Visit {
    int stage;
    typename Env::State state;
    int action;    // base environment action
    int eta_node;  // grid node for augmented kinds, 0 otherwise
    double q_internal;
  };
  int episode = 0;             // 1-based index of the episode just finished
  double episode_return = 0;   // native orientation
  const std::vector<Visit>& visits;
};

template <class Env>
using EpisodeCallback = std::function<void(const Learner<Env>&, const EpisodeInfo<Env>&)>;

/// Episodic least-squares value iteration with mini-batch risk aggregation
/// and lazy policy evaluation.
///
/// Internally everything runs in minimization orientation: for Maximize
/// the rewards are negated on recording and re-negated on output, so one
/// code path implements the clamped Q update; the internal clamp range is
/// the mirror [-cap, 0].
template <class Env>
class Learner {
 public:
  using State = typename Env::State;

  Learner(const Env& env, LearnConfig cfg)
      : env_(&env),
        cfg_(std::move(cfg)),
        rng_env_(Rng::derive(cfg_.seed, 0)),
        rng_coin_(Rng::derive(cfg_.seed, 1)) {
    cfg_.validate();
    H_ = env.horizon();
    if (H_ < 1) throw ContractError("Learner: environment horizon must be >= 1");
    N_ = cfg_.risk.batch_size;
    negate_ = cfg_.risk.orientation == Orientation::Maximize;
    risk_int_ = cfg_.risk.with_orientation(Orientation::Minimize);

    const int m = cfg_.risk.augmented() ? static_cast<int>(cfg_.risk.levels.size()) : 0;
    grid_nodes_ = 1;
    for (int j = 0; j < m; ++j) grid_nodes_ *= cfg_.eta_grid_points;

    dim_.resize(H_);
    lo_.resize(H_);
    hi_.resize(H_);
    beta_.resize(H_);
    feat_.resize(H_);
    for (int h = 0; h < H_; ++h) {
      dim_[h] = env.feature_dim(h);
      if (dim_[h] < 1) throw ContractError("Learner: feature_dim must be >= 1");
      const double cap = static_cast<double>(H_ - h);
      lo_[h] = negate_ ? -cap : 0.0;
      hi_[h] = negate_ ? 0.0 : cap;
      beta_[h] = stage_beta(h);
      gram_.emplace_back(dim_[h], cfg_.ridge);
      W_.push_back(Eigen::MatrixXd::Zero(dim_[h], grid_nodes_));
      etas_.push_back(build_eta_grid(h, m));
      feat_[h].resize(dim_[h]);
    }
    diag_.bonus_sq_sum.assign(H_, 0.0);
    diag_.logdet_sum.assign(H_, 0.0);
    diag_.phi_sq_max.assign(H_, 0.0);
    vtil_.resize(N_);
    tmp_.resize(N_);
  }

  int horizon() const { return H_; }
  int batch_size() const { return N_; }
  int eta_nodes() const { return grid_nodes_; }
  int episodes_done() const { return episodes_done_; }
  const LearnConfig& config() const { return cfg_; }
  const GramState<double>& gram(int h) const { return gram_[h]; }
  double beta_at(int h) const { return beta_[h]; }
  const std::vector<double>& episode_returns() const { return returns_; }

  /// Internal-orientation Q at an explicit (action, eta node) pair.
  double q_internal(const State& x, int h, int action, int eta_node = 0) const {
    env_->features(x, h, action, feat_[h]);
    return q_from_phi(h, feat_[h], eta_node);
  }

  /// Native-orientation Q (re-negated for Maximize).
  double q_native(const State& x, int h, int action, int eta_node = 0) const {
    const double q = q_internal(x, h, action, eta_node);
    return negate_ ? -q : q;
  }

  /// Best (encoded augmented action, internal value) at a state.
  std::pair<int, double> best_internal(const State& x, int h) const {
    const int actions = env_->num_actions(x, h);
    if (actions < 1) throw ContractError("Learner: empty action list");
    int best = 0;
    double val = 0.0;
    bool have = false;
    for (int a = 0; a < actions; ++a) {
      env_->features(x, h, a, feat_[h]);
      const double lin_bonus = beta_[h] * gram_[h].bonus(feat_[h]);
      for (int g = 0; g < grid_nodes_; ++g) {
        const double q =
            std::clamp(W_[h].col(g).dot(feat_[h]) - lin_bonus, lo_[h], hi_[h]);
        if (!have || q < val) {
          have = true;
          best = a * grid_nodes_ + g;
          val = q;
        }
      }
    }
    return {best, val};
  }

  /// One full regression sweep over all stored episodes (stage H-1 down
  /// to 0). Exposed for tests; run() calls it before every rollout.
  void backward_pass() {
    for (int h = H_ - 1; h >= 0; --h) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim_[h], grid_nodes_);
      Eigen::VectorXd y(grid_nodes_);
      DeltaTracker tracker(N_, cfg_.delta_normalized);
      for (auto& episode : records_) {
        StageRec& rec = episode[static_cast<std::size_t>(h)];
        stage_targets(rec, h, tracker, y);
        b.noalias() += rec.phi * y.transpose();
      }
      W_[h].noalias() = gram_[h].inverse() * b;
    }
  }

  void run(int episodes, const EpisodeCallback<Env>& cb = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < episodes; ++k) {
      backward_pass();
      const double ret = forward_pass();
      returns_.push_back(ret);
      ++episodes_done_;
      if (episodes_done_ % cfg_.checkpoint_every == 0 || k == episodes - 1)
        checkpoints_.push_back({episodes_done_, native_weight_copy()});
      if (cb) cb(*this, EpisodeInfo<Env>{episodes_done_, ret, visits_});
    }
    diag_.train_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::vector<Eigen::MatrixXd> native_weight_copy() const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(H_));
    for (int h = 0; h < H_; ++h) out.push_back(negate_ ? (-W_[h]).eval() : W_[h]);
    return out;
  }

  StageWeights snapshot_weights() const {
    StageWeights w;
    w.orientation = cfg_.risk.orientation;
    w.kind = cfg_.risk.kind;
    w.episodes = episodes_done_;
    for (int h = 0; h < H_; ++h) {
      StageWeights::Stage s;
      s.weights = negate_ ? (-W_[h]).eval() : W_[h];
      s.gram = gram_[h].matrix();
      s.eta_grid = negate_ ? (-etas_[h]).eval() : etas_[h];
      s.ridge = cfg_.ridge;
      w.stages.push_back(std::move(s));
    }
    return w;
  }

  TrainResult take_result() {
    TrainResult r;
    r.weights = snapshot_weights();
    r.checkpoints = std::move(checkpoints_);
    r.episode_returns = std::move(returns_);
    long clamps = 0;
    for (const auto& g : gram_) clamps += g.negative_bonus_count();
    diag_.negative_bonus_clamps = clamps;
    r.diag = diag_;
    return r;
  }

  const TrainDiagnostics& diagnostics() const { return diag_; }

 private:
  struct StageRec {
    State state;
    int action = 0;
    int eta_node = 0;
    Eigen::VectorXd phi;
    Eigen::VectorXd rewards;  // internal orientation
    std::vector<State> next;
    std::vector<int> cached;      // encoded successor actions, empty until first touch
    Eigen::MatrixXd cached_phi;   // d_{h+1} x N
  };
  using Episode = std::vector<StageRec>;

  double stage_beta(int h) const {
    if (!cfg_.beta_schedule) return cfg_.beta;
    const double d = static_cast<double>(env_->feature_dim(h));
    const double gamma =
        std::log(2.0 * d * static_cast<double>(cfg_.episodes) * H_ / cfg_.confidence);
    return cfg_.c_beta * d * H_ * std::sqrt(gamma);
  }

  Eigen::MatrixXd build_eta_grid(int h, int levels) const {
    if (levels == 0) return Eigen::MatrixXd::Zero(0, 1);
    const int pts = cfg_.eta_grid_points;
    Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(pts, lo_[h], hi_[h]);
    Eigen::MatrixXd grid(levels, grid_nodes_);
    for (int g = 0; g < grid_nodes_; ++g) {
      int rest = g;
      for (int j = 0; j < levels; ++j) {
        grid(j, g) = axis[rest % pts];
        rest /= pts;
      }
    }
    return grid;
  }

  double q_from_phi(int h, const Eigen::Ref<const Eigen::VectorXd>& phi, int g) const {
    const double lin = W_[h].col(g).dot(phi);
    const double b = gram_[h].bonus(phi);
    return std::clamp(lin - beta_[h] * b, lo_[h], hi_[h]);
  }

  double cached_q(const StageRec& rec, int hp, int j) const {
    const int g = rec.cached[static_cast<std::size_t>(j)] % grid_nodes_;
    return q_from_phi(hp, rec.cached_phi.col(j), g);
  }

  // Successor values Vtil_{h+1}^{tau,j} for one record, lazily evaluated.
  void successor_values(StageRec& rec, int h, DeltaTracker& tracker,
                        Eigen::Ref<Eigen::VectorXd> out) {
    const int hp = h + 1;
    const bool first = rec.cached.empty();
    bool renew = true;
    if (!cfg_.full_eval) {
      // The coin is always drawn so the stream shape is pass-invariant.
      const bool coin = rng_coin_.uniform01() < cfg_.p_renew;
      renew = coin || first;
    }
    const bool track = renew && !first && !cfg_.full_eval;
    if (renew && first) {
      rec.cached.assign(static_cast<std::size_t>(N_), 0);
      rec.cached_phi.resize(dim_[hp], N_);
    }
    lazy_values(
        N_, renew, track, tracker,
        [&](int j) { return best_internal(rec.next[static_cast<std::size_t>(j)], hp); },
        [&](int j) { return cached_q(rec, hp, j); },
        [&](int j, int action) {
          rec.cached[static_cast<std::size_t>(j)] = action;
          env_->features(rec.next[static_cast<std::size_t>(j)], hp, action / grid_nodes_,
                         rec.cached_phi.col(j));
        },
        out);
    if (track) ++diag_.renewals;
  }

  void stage_targets(StageRec& rec, int h, DeltaTracker& tracker, Eigen::Ref<Eigen::VectorXd> y) {
    const bool det = env_->deterministic_rewards();
    const bool aug = cfg_.risk.augmented();
    if (h == H_ - 1) {
      if (det) {
        y.setConstant(rec.rewards[0]);
      } else if (aug) {
        for (int g = 0; g < grid_nodes_; ++g)
          y[g] = aggregate_augmented(rec.rewards[0], etas_[h].col(g), risk_int_);
      } else {
        y.setConstant(aggregate(rec.rewards, risk_int_));
      }
      return;
    }
    successor_values(rec, h, tracker, vtil_);
    if (aug) {
      const double base = det ? rec.rewards[0] : 0.0;
      const double v = det ? vtil_[0] : rec.rewards[0] + vtil_[0];
      for (int g = 0; g < grid_nodes_; ++g)
        y[g] = base + aggregate_augmented(v, etas_[h].col(g), risk_int_);
    } else if (det) {
      y.setConstant(rec.rewards[0] + psi_estimate(vtil_, risk_int_));
    } else {
      tmp_ = rec.rewards + vtil_;
      y.setConstant(psi_estimate(tmp_, risk_int_));
    }
  }

  double forward_pass() {
    Episode episode(static_cast<std::size_t>(H_));
    visits_.clear();
    State x = env_->initial_state(rng_env_);
    double ret = 0.0;
    for (int h = 0; h < H_; ++h) {
      const auto [encoded, q] = best_internal(x, h);
      const int action = encoded / grid_nodes_;
      const int node = encoded % grid_nodes_;
      visits_.push_back({h, x, action, node, q});

      batch_.reset(N_, h < H_ - 1);
      env_->sample_batch(x, h, action, N_, rng_env_, batch_);
      if (h < H_ - 1 && static_cast<int>(batch_.next.size()) != N_)
        throw ContractError("sample_batch: successor count does not match batch size");

      StageRec& rec = episode[static_cast<std::size_t>(h)];
      rec.state = x;
      rec.action = action;
      rec.eta_node = node;
      rec.phi.resize(dim_[h]);
      env_->features(x, h, action, rec.phi);
      rec.rewards = negate_ ? (-batch_.rewards).eval() : batch_.rewards;
      rec.next = std::move(batch_.next);

      const double b = gram_[h].bonus(rec.phi);
      diag_.bonus_sq_sum[h] += b * b;
      diag_.logdet_sum[h] += std::log1p(b * b);
      diag_.phi_sq_max[h] = std::max(diag_.phi_sq_max[h], rec.phi.squaredNorm());

      const int pick = rng_env_.uniform_int(N_);
      ret += batch_.rewards[pick];
      if (h < H_ - 1) x = rec.next[static_cast<std::size_t>(pick)];
    }
    for (int h = 0; h < H_; ++h) gram_[h].update(episode[static_cast<std::size_t>(h)].phi);
    records_.push_back(std::move(episode));
    return ret;
  }

  const Env* env_;
  LearnConfig cfg_;
  RiskConfig risk_int_;
  int H_ = 0;
  int N_ = 1;
  int grid_nodes_ = 1;
  bool negate_ = false;

  std::vector<int> dim_;
  std::vector<double> lo_, hi_, beta_;
  std::vector<GramState<double>> gram_;
  std::vector<Eigen::MatrixXd> W_;     // internal orientation, d_h x G
  std::vector<Eigen::MatrixXd> etas_;  // internal-space grid, m x G

  std::vector<Episode> records_;
  std::vector<double> returns_;
  std::vector<Checkpoint> checkpoints_;
  std::vector<typename EpisodeInfo<Env>::Visit> visits_;
  TrainDiagnostics diag_;
  int episodes_done_ = 0;

  Rng rng_env_, rng_coin_;
  mutable std::vector<Eigen::VectorXd> feat_;
  Eigen::VectorXd vtil_, tmp_;
  Batch<State> batch_;
};

template <class Env>
TrainResult train(const Env& env, const LearnConfig& cfg, const EpisodeCallback<Env>& cb = {}) {
  Learner<Env> learner(env, cfg);
  learner.run(cfg.episodes, cb);
  return learner.take_result();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalConfig {
  int episodes = 10000;
  std::uint64_t seed = 0;
  double beta = 0.0;  // bonus-free greedy evaluation by default
};

/// Greedy policy over frozen native weights.
template <class Env>
class GreedyPolicy {
 public:
  using State = typename Env::State;

  GreedyPolicy(const Env& env, const StageWeights& w, double beta = 0.0)
      : env_(&env), w_(&w), beta_(beta) {
    if (w.horizon() != env.horizon())
      throw InputError("GreedyPolicy: weights horizon does not match environment");
    for (int h = 0; h < w.horizon(); ++h) {
      if (w.stages[static_cast<std::size_t>(h)].weights.rows() != env.feature_dim(h))
        throw InputError("GreedyPolicy: weights dimension does not match environment");
      if (beta_ > 0.0)
        gram_.push_back(GramState<double>::from_matrix(
            w.stages[static_cast<std::size_t>(h)].gram,
            w.stages[static_cast<std::size_t>(h)].ridge));
      feat_.emplace_back(env.feature_dim(h));
    }
  }

  int operator()(const State& x, int h) const {
    const auto& stage = w_->stages[static_cast<std::size_t>(h)];
    const int actions = env_->num_actions(x, h);
    const int nodes = static_cast<int>(stage.weights.cols());
    const double cap = w_->stage_cap(h);
    const bool maximize = w_->orientation == Orientation::Maximize;
    int best = 0;
    double val = 0.0;
    bool have = false;
    for (int a = 0; a < actions; ++a) {
      env_->features(x, h, a, feat_[static_cast<std::size_t>(h)]);
      double adj = 0.0;
      if (beta_ > 0.0) {
        const double b = gram_[static_cast<std::size_t>(h)].bonus(feat_[static_cast<std::size_t>(h)]);
        adj = maximize ? beta_ * b : -beta_ * b;
      }
      for (int g = 0; g < nodes; ++g) {
        const double q =
            std::clamp(stage.weights.col(g).dot(feat_[static_cast<std::size_t>(h)]) + adj, 0.0, cap);
        const bool better = maximize ? q > val : q < val;
        if (!have || better) {
          have = true;
          best = a;
          val = q;
        }
      }
    }
    return best;
  }

 private:
  const Env* env_;
  const StageWeights* w_;
  double beta_;
  std::vector<GramState<double>> gram_;
  mutable std::vector<Eigen::VectorXd> feat_;
};

/// Independent rollouts of a deterministic policy; episode m uses the RNG
/// stream derived from (seed, m), so results are order-independent.
template <class Env, class Policy>
std::vector<double> rollout_returns(const Env& env, const Policy& policy, int episodes,
                                    std::uint64_t seed) {
  const int H = env.horizon();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  Batch<typename Env::State> batch;
  for (int m = 0; m < episodes; ++m) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(m) + 2);
    typename Env::State x = env.initial_state(rng);
    double ret = 0.0;
    for (int h = 0; h < H; ++h) {
      const int a = policy(x, h);
      batch.reset(1, h < H - 1);
      env.sample_batch(x, h, a, 1, rng, batch);
      ret += batch.rewards[0];
      if (h < H - 1) x = batch.next[0];
    }
    out.push_back(ret);
  }
  return out;
}

template <class Env>
std::vector<double> evaluate_policy(const Env& env, const StageWeights& w, const EvalConfig& ec) {
  GreedyPolicy<Env> policy(env, w, ec.beta);
  return rollout_returns(env, policy, ec.episodes, ec.seed);
}

}  // namespace riskq
