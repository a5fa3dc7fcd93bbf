#include "riskq/tabular.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace riskq {

namespace {
constexpr double kProbTolerance = 1e-12;
}

void TabularMDP::validate() const {
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw InputError("TabularMDP: states, actions and horizon must be positive");
  if (terminal_cost.size() != num_states)
    throw InputError("TabularMDP: terminal cost size mismatch");
  if ((terminal_cost.array() < 0.0).any() || (terminal_cost.array() > 1.0).any())
    throw InputError("TabularMDP: terminal costs must lie in [0,1]");
  const std::size_t expected =
      static_cast<std::size_t>((horizon - 1) * num_states * num_actions);
  if (atoms.size() != expected) throw InputError("TabularMDP: transition table size mismatch");
  for (const auto& row : atoms) {
    if (row.empty()) throw InputError("TabularMDP: empty transition row");
    double total = 0.0;
    for (const auto& atom : row) {
      if (atom.prob < 0.0) throw InputError("TabularMDP: negative transition probability");
      if (atom.cost < 0.0 || atom.cost > 1.0) throw InputError("TabularMDP: cost outside [0,1]");
      if (atom.next < 0 || atom.next >= num_states)
        throw InputError("TabularMDP: successor index out of range");
      total += atom.prob;
    }
    if (std::abs(total - 1.0) > kProbTolerance)
      throw InputError("TabularMDP: transition row does not sum to one");
  }
}

namespace {

FiniteDistribution continuation_distribution(const std::vector<TransitionAtom>& row,
                                             const Eigen::VectorXd& v_next) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(row.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) {
    p[static_cast<Eigen::Index>(i)] = row[i].prob;
    v[static_cast<Eigen::Index>(i)] = row[i].cost + v_next[row[i].next];
  }
  return FiniteDistribution::make(std::move(p), std::move(v));
}

void fill_terminal(const TabularMDP& mdp, ValueTable& t) {
  const int H = mdp.horizon;
  t.V.assign(static_cast<std::size_t>(H), Eigen::VectorXd());
  t.Q.assign(static_cast<std::size_t>(H), Eigen::MatrixXd());
  t.policy.assign(static_cast<std::size_t>(H),
                  std::vector<int>(static_cast<std::size_t>(mdp.num_states), 0));
  t.V.back() = mdp.terminal_cost;
  t.Q.back() = mdp.terminal_cost.replicate(1, mdp.num_actions);
}

}  // namespace

ValueTable solve(const TabularMDP& mdp, const RiskConfig& cfg) {
  mdp.validate();
  cfg.validate();
  ValueTable t;
  fill_terminal(mdp, t);
  for (int h = mdp.horizon - 2; h >= 0; --h) {
    auto& Q = t.Q[static_cast<std::size_t>(h)];
    auto& V = t.V[static_cast<std::size_t>(h)];
    Q.resize(mdp.num_states, mdp.num_actions);
    V.resize(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        const auto fd = continuation_distribution(mdp.at(h, x, a), t.V[static_cast<std::size_t>(h) + 1]);
        Q(x, a) = transition_risk_exact(fd, cfg);
      }
      const auto [best, val] = arg_opt(Q.row(x).transpose(), cfg.orientation);
      t.policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)] = best;
      V[x] = val;
    }
  }
  return t;
}

ValueTable policy_value(const TabularMDP& mdp, const std::vector<std::vector<int>>& policy,
                        const RiskConfig& cfg) {
  mdp.validate();
  cfg.validate();
  if (static_cast<int>(policy.size()) < mdp.horizon - 1)
    throw InputError("policy_value: policy is missing stages");
  ValueTable t;
  fill_terminal(mdp, t);
  for (int h = mdp.horizon - 2; h >= 0; --h) {
    const auto& pol = policy[static_cast<std::size_t>(h)];
    if (static_cast<int>(pol.size()) != mdp.num_states)
      throw InputError("policy_value: policy stage has wrong state count");
    auto& Q = t.Q[static_cast<std::size_t>(h)];
    auto& V = t.V[static_cast<std::size_t>(h)];
    Q.resize(mdp.num_states, mdp.num_actions);
    V.resize(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x) {
      const int ax = pol[static_cast<std::size_t>(x)];
      if (ax < 0 || ax >= mdp.num_actions) throw InputError("policy_value: invalid policy action");
      for (int a = 0; a < mdp.num_actions; ++a) {
        const auto fd = continuation_distribution(mdp.at(h, x, a), t.V[static_cast<std::size_t>(h) + 1]);
        Q(x, a) = transition_risk_exact(fd, cfg);
      }
      V[x] = Q(x, ax);
      t.policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)] = ax;
    }
  }
  return t;
}

namespace {

// Direct recursive enumeration of all N-tuples of cost-successor atoms;
// deliberately separate from minibatch_risk_exact so the two routes stay
// independent.
double sigma_by_enumeration(const std::vector<TransitionAtom>& row, const Eigen::VectorXd& v_next,
                            const RiskConfig& cfg, Eigen::VectorXd& batch, int j, double p_acc) {
  if (j == cfg.batch_size) return p_acc * aggregate(batch, cfg);
  double total = 0.0;
  for (const auto& atom : row) {
    if (atom.prob == 0.0) continue;
    batch[j] = atom.cost + v_next[atom.next];
    total += sigma_by_enumeration(row, v_next, cfg, batch, j + 1, p_acc * atom.prob);
  }
  return total;
}

double sigma_oracle(const std::vector<TransitionAtom>& row, const Eigen::VectorXd& v_next,
                    const RiskConfig& cfg, Eigen::VectorXd& batch) {
  if (cfg.augmented()) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(row.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      p[static_cast<Eigen::Index>(i)] = row[i].prob;
      v[static_cast<Eigen::Index>(i)] = row[i].cost + v_next[row[i].next];
    }
    return spectral_risk_exact(FiniteDistribution::make(std::move(p), std::move(v)), cfg);
  }
  return sigma_by_enumeration(row, v_next, cfg, batch, 0, 1.0);
}

}  // namespace

ValueTable brute_force_verify(const TabularMDP& mdp, const RiskConfig& cfg) {
  mdp.validate();
  cfg.validate();
  if (mdp.num_states * mdp.num_actions > 12 || mdp.horizon > 3)
    throw CapacityError("brute_force_verify: instance exceeds the tiny-case guard");

  const int H = mdp.horizon;
  const int X = mdp.num_states;
  const int A = mdp.num_actions;
  const int decision_stages = H - 1;
  const int slots = decision_stages * X;

  const bool minimize = cfg.orientation == Orientation::Minimize;
  const double worst = minimize ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();

  ValueTable best;
  fill_terminal(mdp, best);
  for (int h = 0; h < decision_stages; ++h) {
    best.V[static_cast<std::size_t>(h)] = Eigen::VectorXd::Constant(X, worst);
    best.Q[static_cast<std::size_t>(h)] = Eigen::MatrixXd::Constant(X, A, worst);
  }
  if (decision_stages == 0) return best;

  std::vector<int> assignment(static_cast<std::size_t>(slots), 0);
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(H));
  v[static_cast<std::size_t>(H - 1)] = mdp.terminal_cost;
  Eigen::VectorXd batch(cfg.batch_size);

  const auto better = [&](double a, double b) { return minimize ? a < b : a > b; };

  while (true) {
    // Evaluate the current policy bottom-up with the local enumerator.
    for (int h = decision_stages - 1; h >= 0; --h) {
      auto& vh = v[static_cast<std::size_t>(h)];
      vh.resize(X);
      for (int x = 0; x < X; ++x) {
        const int a = assignment[static_cast<std::size_t>(h * X + x)];
        vh[x] = sigma_oracle(mdp.at(h, x, a), v[static_cast<std::size_t>(h) + 1], cfg, batch);
      }
    }
    for (int h = 0; h < decision_stages; ++h) {
      for (int x = 0; x < X; ++x) {
        const int a = assignment[static_cast<std::size_t>(h * X + x)];
        const double val = v[static_cast<std::size_t>(h)][x];
        if (better(val, best.V[static_cast<std::size_t>(h)][x]))
          best.V[static_cast<std::size_t>(h)][x] = val;
        if (better(val, best.Q[static_cast<std::size_t>(h)](x, a)))
          best.Q[static_cast<std::size_t>(h)](x, a) = val;
      }
    }
    int slot = 0;
    for (; slot < slots; ++slot) {
      if (++assignment[static_cast<std::size_t>(slot)] < A) break;
      assignment[static_cast<std::size_t>(slot)] = 0;
    }
    if (slot == slots) break;
  }

  for (int h = 0; h < decision_stages; ++h) {
    for (int x = 0; x < X; ++x) {
      const auto [a, val] =
          arg_opt(best.Q[static_cast<std::size_t>(h)].row(x).transpose(), cfg.orientation);
      best.policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)] = a;
      (void)val;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON input/output
// ---------------------------------------------------------------------------

TabularMDP TabularMDP::parse(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("TabularMDP: invalid JSON: ") + e.what());
  }
  TabularMDP mdp;
  try {
    mdp.horizon = doc.at("horizon").get<int>();
    mdp.num_states = doc.at("num_states").get<int>();
    mdp.num_actions = doc.at("num_actions").get<int>();
    const auto term = doc.at("terminal_costs").get<std::vector<double>>();
    mdp.terminal_cost = Eigen::Map<const Eigen::VectorXd>(term.data(),
                                                          static_cast<Eigen::Index>(term.size()));
    mdp.atoms.resize(static_cast<std::size_t>(
        std::max(0, (mdp.horizon - 1) * mdp.num_states * mdp.num_actions)));
    if (doc.contains("transitions")) {
      const auto& tr = doc.at("transitions");
      for (int h = 0; h + 1 < mdp.horizon; ++h)
        for (int x = 0; x < mdp.num_states; ++x)
          for (int a = 0; a < mdp.num_actions; ++a) {
            auto& row = mdp.at(h, x, a);
            for (const auto& atom : tr.at(h).at(x).at(a))
              row.push_back({atom.at(0).get<double>(), atom.at(1).get<double>(),
                             atom.at(2).get<int>()});
          }
    } else {
      const auto& kernels = doc.at("kernels");
      const auto& costs = doc.at("costs");
      for (int h = 0; h + 1 < mdp.horizon; ++h)
        for (int x = 0; x < mdp.num_states; ++x)
          for (int a = 0; a < mdp.num_actions; ++a) {
            auto& row = mdp.at(h, x, a);
            const double cost = costs.at(h).at(x).at(a).get<double>();
            const auto& kernel = kernels.at(h).at(x).at(a);
            for (int y = 0; y < mdp.num_states; ++y) {
              const double p = kernel.at(y).get<double>();
              if (p > 0.0) row.push_back({p, cost, y});
            }
          }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("TabularMDP: malformed document: ") + e.what());
  }
  for (const auto& row : mdp.atoms)
    for (const auto& atom : row)
      if (std::abs(atom.cost - row.front().cost) > 0.0) mdp.random_costs = true;
  mdp.validate();
  return mdp;
}

TabularMDP TabularMDP::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("TabularMDP: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string TabularMDP::to_json_text() const {
  nlohmann::json doc;
  doc["horizon"] = horizon;
  doc["num_states"] = num_states;
  doc["num_actions"] = num_actions;
  doc["terminal_costs"] = std::vector<double>(terminal_cost.data(),
                                              terminal_cost.data() + terminal_cost.size());
  auto tr = nlohmann::json::array();
  for (int h = 0; h + 1 < horizon; ++h) {
    auto per_state = nlohmann::json::array();
    for (int x = 0; x < num_states; ++x) {
      auto per_action = nlohmann::json::array();
      for (int a = 0; a < num_actions; ++a) {
        auto row = nlohmann::json::array();
        for (const auto& atom : at(h, x, a))
          row.push_back({atom.prob, atom.cost, atom.next});
        per_action.push_back(std::move(row));
      }
      per_state.push_back(std::move(per_action));
    }
    tr.push_back(std::move(per_state));
  }
  doc["transitions"] = std::move(tr);
  return doc.dump(2);
}

std::string value_table_to_json_text(const ValueTable& table) {
  nlohmann::json doc;
  auto vj = nlohmann::json::array();
  auto qj = nlohmann::json::array();
  for (std::size_t h = 0; h < table.V.size(); ++h) {
    vj.push_back(std::vector<double>(table.V[h].data(), table.V[h].data() + table.V[h].size()));
    auto rows = nlohmann::json::array();
    for (Eigen::Index x = 0; x < table.Q[h].rows(); ++x) {
      std::vector<double> row(static_cast<std::size_t>(table.Q[h].cols()));
      for (Eigen::Index a = 0; a < table.Q[h].cols(); ++a)
        row[static_cast<std::size_t>(a)] = table.Q[h](x, a);
      rows.push_back(std::move(row));
    }
    qj.push_back(std::move(rows));
  }
  doc["V"] = std::move(vj);
  doc["Q"] = std::move(qj);
  doc["policy"] = table.policy;
  return doc.dump(2);
}

TabularMDP small_benchmark_mdp() {
  // Well-mixed kernels; costs chosen so every optimal action gap lies in
  // [0.01, 0.02] under WorstMix kappa=0.5, N=2, and the greedy policy is
  // non-constant across states.
  const double P0[3][2][3] = {{{0.60, 0.30, 0.10}, {0.20, 0.50, 0.30}},
                              {{0.30, 0.40, 0.30}, {0.50, 0.20, 0.30}},
                              {{0.25, 0.35, 0.40}, {0.40, 0.35, 0.25}}};
  const double P1[3][2][3] = {{{0.50, 0.25, 0.25}, {0.30, 0.40, 0.30}},
                              {{0.20, 0.45, 0.35}, {0.35, 0.40, 0.25}},
                              {{0.45, 0.30, 0.25}, {0.25, 0.30, 0.45}}};
  const double R0[3][2] = {{0.4023, 0.35}, {0.20, 0.2521}, {0.4678, 0.45}};
  const double R1[3][2] = {{0.30, 0.2155}, {0.3415, 0.42}, {0.25, 0.11}};

  TabularMDP mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.horizon = 3;
  mdp.terminal_cost = Eigen::Vector3d(0.1, 0.5, 0.9);
  mdp.atoms.resize(2 * 3 * 2);
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < 2; ++a) {
      for (int y = 0; y < 3; ++y) {
        mdp.at(0, x, a).push_back({P0[x][a][y], R0[x][a], y});
        mdp.at(1, x, a).push_back({P1[x][a][y], R1[x][a], y});
      }
    }
  mdp.validate();
  return mdp;
}

}  // namespace riskq
