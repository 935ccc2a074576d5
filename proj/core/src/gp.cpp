#include "ngcg/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ngcg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Op kUnaryOps[] = {Op::Sq, Op::Cube, Op::Sqrt, Op::Exp, Op::Log, Op::Sin, Op::Cos};
const Op kBinaryOps[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};

struct Individual {
  Expression expr;
  double fitness = kInf;
  double mse = kInf;
  double a = 1.0, b = 0.0;  // affine calibration
};

ExprNode random_leaf(std::size_t n_vars, Rng& rng) {
  if (rng.uniform() < 0.6) {
    return {Op::Var, 0.0, static_cast<std::uint16_t>(rng.below(n_vars))};
  }
  return {Op::Const, rng.uniform(-2.0, 2.0), 0};  // ephemeral constant
}

void grow(std::vector<ExprNode>& nodes, std::size_t depth_left, bool full, std::size_t n_vars,
          Rng& rng) {
  if (depth_left == 0 || (!full && rng.uniform() < 0.3)) {
    nodes.push_back(random_leaf(n_vars, rng));
    return;
  }
  if (rng.uniform() < 0.75) {
    nodes.push_back({kBinaryOps[rng.below(4)], 0.0, 0});
    grow(nodes, depth_left - 1, full, n_vars, rng);
    grow(nodes, depth_left - 1, full, n_vars, rng);
  } else {
    nodes.push_back({kUnaryOps[rng.below(7)], 0.0, 0});
    grow(nodes, depth_left - 1, full, n_vars, rng);
  }
}

Expression random_tree(std::size_t depth, bool full, std::size_t n_vars, Rng& rng) {
  Expression e;
  grow(e.nodes, depth, full, n_vars, rng);
  return e;
}

// Affine-calibrated MSE on a sample subset; non-finite values disqualify.
struct Evaluator {
  const std::vector<double>& X;
  const std::vector<double>& y;
  std::size_t n;
  std::size_t n_vars;
  std::vector<double> buf;
  double y_mean = 0.0, y_var = 0.0;

  Evaluator(const std::vector<double>& X_, const std::vector<double>& y_, std::size_t n_,
            std::size_t n_vars_)
      : X(X_), y(y_), n(n_), n_vars(n_vars_), buf(n_) {
    for (std::size_t i = 0; i < n; ++i) y_mean += y[i];
    y_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y_var += (y[i] - y_mean) * (y[i] - y_mean);
    y_var /= static_cast<double>(n);
  }

  // returns false when evaluation is invalid anywhere
  bool calibrated_mse(const Expression& e, double& mse, double& a, double& b) {
    e.eval_batch({X.data(), n * n_vars}, n, n_vars, buf);
    double fm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(buf[i])) return false;
      fm += buf[i];
    }
    fm /= static_cast<double>(n);
    double fv = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = buf[i] - fm;
      fv += d * d;
      cov += d * (y[i] - y_mean);
    }
    fv /= static_cast<double>(n);
    cov /= static_cast<double>(n);
    if (fv < 1e-18) {  // constant-valued expression
      a = 0.0;
      b = y_mean;
      mse = y_var;
      return true;
    }
    a = cov / fv;
    b = y_mean - a * fm;
    mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = a * buf[i] + b - y[i];
      mse += r * r;
    }
    mse /= static_cast<double>(n);
    return std::isfinite(mse);
  }
};

void score(Individual& ind, Evaluator& ev, const GpConfig& cfg) {
  double mse, a, b;
  if (ind.expr.nodes.empty() || ind.expr.depth() > cfg.max_depth ||
      !ev.calibrated_mse(ind.expr, mse, a, b)) {
    ind.fitness = kInf;
    ind.mse = kInf;
    return;
  }
  ind.mse = mse;
  ind.a = a;
  ind.b = b;
  ind.fitness =
      mse * (1.0 + cfg.complexity_weight * static_cast<double>(ind.expr.complexity()));
}

Expression crossover(const Expression& a, const Expression& b, Rng& rng) {
  std::size_t ia = rng.below(a.nodes.size());
  std::size_t ea = a.subtree_end(ia);
  std::size_t ib = rng.below(b.nodes.size());
  std::size_t eb = b.subtree_end(ib);
  Expression child;
  child.nodes.reserve(a.nodes.size() - (ea - ia) + (eb - ib));
  child.nodes.insert(child.nodes.end(), a.nodes.begin(), a.nodes.begin() + ia);
  child.nodes.insert(child.nodes.end(), b.nodes.begin() + ib, b.nodes.begin() + eb);
  child.nodes.insert(child.nodes.end(), a.nodes.begin() + ea, a.nodes.end());
  return child;
}

Expression subtree_mutate(const Expression& a, std::size_t n_vars, Rng& rng) {
  std::size_t ia = rng.below(a.nodes.size());
  std::size_t ea = a.subtree_end(ia);
  Expression repl = random_tree(2 + rng.below(2), false, n_vars, rng);
  Expression child;
  child.nodes.insert(child.nodes.end(), a.nodes.begin(), a.nodes.begin() + ia);
  child.nodes.insert(child.nodes.end(), repl.nodes.begin(), repl.nodes.end());
  child.nodes.insert(child.nodes.end(), a.nodes.begin() + ea, a.nodes.end());
  return child;
}

Expression point_mutate(const Expression& a, std::size_t n_vars, Rng& rng) {
  Expression child = a;
  std::size_t i = rng.below(child.nodes.size());
  ExprNode& n = child.nodes[i];
  switch (op_arity(n.op)) {
    case 0:
      if (n.op == Op::Const && rng.uniform() < 0.5) {
        n.value += 0.3 * n.value * rng.normal() + 0.05 * rng.normal();  // jiggle
      } else {
        n = random_leaf(n_vars, rng);  // leaf swap: constants <-> variables
      }
      break;
    case 1:
      n.op = kUnaryOps[rng.below(7)];
      break;
    default:
      n.op = kBinaryOps[rng.below(4)];
      break;
  }
  return child;
}

}  // namespace

std::vector<GpEntry> gp_symreg(const std::vector<double>& X, const std::vector<double>& y,
                               std::size_t n_vars, const GpConfig& cfg, std::uint64_t seed,
                               const std::vector<Expression>& seeds) {
  const std::size_t n_total = y.size();
  if (n_total < 100) throw std::invalid_argument("gp_symreg: need at least 100 samples");
  if (X.size() != n_total * n_vars) throw std::invalid_argument("gp_symreg: sample shape");

  Rng rng = Rng::derive(seed, kTagGp, 0);

  // Deterministic fitting subset (stride sampling keeps it reproducible).
  std::size_t n_fit = std::min(cfg.fit_subsample, n_total);
  std::vector<double> Xfit(n_fit * n_vars), yfit(n_fit);
  for (std::size_t i = 0; i < n_fit; ++i) {
    std::size_t src = i * n_total / n_fit;
    std::copy_n(X.data() + src * n_vars, n_vars, Xfit.data() + i * n_vars);
    yfit[i] = y[src];
  }
  Evaluator ev(Xfit, yfit, n_fit, n_vars);
  Evaluator ev_full(X, y, n_total, n_vars);

  // Per-complexity hall of fame.
  std::map<std::size_t, Individual> hof;
  auto consider = [&](const Individual& ind) {
    if (!std::isfinite(ind.mse)) return;
    std::size_t c = ind.expr.complexity();
    if (c > cfg.max_complexity) return;
    auto it = hof.find(c);
    if (it == hof.end() || ind.mse < it->second.mse) hof[c] = ind;
  };

  // Initial islands: ramped half-and-half, plus the provided seeds spread
  // round-robin across islands.
  std::vector<std::vector<Individual>> islands(cfg.islands);
  for (std::size_t is = 0; is < cfg.islands; ++is) {
    auto& pop = islands[is];
    pop.resize(cfg.population);
    for (std::size_t p = 0; p < cfg.population; ++p) {
      std::size_t d = 2 + p % 3;
      pop[p].expr = random_tree(d, p % 2 == 0, n_vars, rng);
      score(pop[p], ev, cfg);
      consider(pop[p]);
    }
  }
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (!seeds[s].well_formed(n_vars) || seeds[s].depth() > cfg.max_depth) continue;
    Individual ind;
    ind.expr = seeds[s];
    score(ind, ev, cfg);
    islands[s % cfg.islands][0] = ind;
    consider(ind);
  }

  auto tournament_best = [&](std::vector<Individual>& pop) -> std::size_t {
    std::size_t best = rng.below(pop.size());
    for (std::size_t k = 1; k < cfg.tournament; ++k) {
      std::size_t c = rng.below(pop.size());
      if (pop[c].fitness < pop[best].fitness) best = c;
    }
    return best;
  };
  auto tournament_worst = [&](std::vector<Individual>& pop) -> std::size_t {
    std::size_t worst = rng.below(pop.size());
    for (std::size_t k = 1; k < cfg.tournament; ++k) {
      std::size_t c = rng.below(pop.size());
      if (pop[c].fitness > pop[worst].fitness) worst = c;
    }
    return worst;
  };

  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    for (std::size_t is = 0; is < cfg.islands; ++is) {
      auto& pop = islands[is];
      for (std::size_t cycle = 0; cycle < cfg.cycles_per_iteration; ++cycle) {
        double roll = rng.uniform();
        Individual child;
        if (roll < cfg.p_crossover) {
          const auto& pa = pop[tournament_best(pop)].expr;
          const auto& pb = pop[tournament_best(pop)].expr;
          child.expr = crossover(pa, pb, rng);
        } else if (roll < cfg.p_crossover + cfg.p_subtree_mut) {
          child.expr = subtree_mutate(pop[tournament_best(pop)].expr, n_vars, rng);
        } else {
          child.expr = point_mutate(pop[tournament_best(pop)].expr, n_vars, rng);
        }
        if (child.expr.depth() > cfg.max_depth) continue;
        score(child, ev, cfg);
        if (!std::isfinite(child.fitness)) continue;
        consider(child);
        pop[tournament_worst(pop)] = std::move(child);
      }
      // one fresh immigrant per island per round
      Individual imm;
      imm.expr = random_tree(3, false, n_vars, rng);
      score(imm, ev, cfg);
      consider(imm);
      pop[tournament_worst(pop)] = std::move(imm);
    }
    // ring migration: best of island i replaces a tournament loser on i+1
    if (cfg.islands > 1) {
      for (std::size_t is = 0; is < cfg.islands; ++is) {
        auto& src = islands[is];
        auto& dst = islands[(is + 1) % cfg.islands];
        std::size_t best = 0;
        for (std::size_t p = 1; p < src.size(); ++p)
          if (src[p].fitness < src[best].fitness) best = p;
        dst[tournament_worst(dst)] = src[best];
      }
    }
  }

  // Re-score the hall of fame on the full sample set and keep the Pareto
  // front under (mse, complexity).
  std::vector<GpEntry> entries;
  for (auto& [c, ind] : hof) {
    double mse, a, b;
    if (!ev_full.calibrated_mse(ind.expr, mse, a, b)) continue;
    Expression cal = affine_wrap(ind.expr, a, b);
    entries.push_back({std::move(cal), mse, c});
  }
  std::sort(entries.begin(), entries.end(), [](const GpEntry& l, const GpEntry& r) {
    return l.complexity < r.complexity;
  });
  std::vector<GpEntry> pareto;
  double best_mse = kInf;
  for (auto& e : entries) {
    if (e.mse < best_mse) {
      best_mse = e.mse;
      pareto.push_back(std::move(e));
    }
  }
  return pareto;
}

}  // namespace ngcg
