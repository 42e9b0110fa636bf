#include "core/lp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace terra::lp {

int LinearProgram::add_variable(std::string name, double upper) {
  if (upper < 0.0) throw std::invalid_argument("variable upper bound below zero");
  names_.push_back(std::move(name));
  uppers_.push_back(upper);
  obj_.push_back(0.0);
  return static_cast<int>(names_.size()) - 1;
}

void LinearProgram::set_objective(int var, double coeff) {
  if (!std::isfinite(coeff)) throw std::invalid_argument("non-finite objective coefficient");
  obj_.at(var) = coeff;
}

int LinearProgram::add_constraint(std::vector<Term> terms, Cmp cmp, double rhs) {
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= var_count()) throw std::invalid_argument("constraint term out of range");
    if (!std::isfinite(t.coeff)) throw std::invalid_argument("non-finite constraint coefficient");
  }
  if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite rhs");
  rows_.push_back(Constraint{std::move(terms), cmp, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

namespace {

constexpr double kEps = 1e-9;
constexpr double kPhase1Tol = 1e-7;

// Full-tableau simplex in minimization form.
class Tableau {
 public:
  Tableau(int rows, int cols) : m_(rows), n_(cols), a_(static_cast<size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int r, int c) { return a_[static_cast<size_t>(r) * (n_ + 1) + c]; }
  double at(int r, int c) const { return a_[static_cast<size_t>(r) * (n_ + 1) + c]; }
  double& rhs(int r) { return at(r, n_); }
  double& cost(int c) { return at(m_, c); }

  int rows() const { return m_; }
  int cols() const { return n_; }

  void pivot(int pr, int pc) {
    double piv = at(pr, pc);
    double inv = 1.0 / piv;
    for (int c = 0; c <= n_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (int r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  int m_, n_;
  std::vector<double> a_;
};

// Entering column: Dantzig (most negative reduced cost, smallest index on
// ties) for the first `dantzig_budget` iterations, then Bland's rule.
int pick_entering(const Tableau& t, const std::vector<bool>& allowed, bool bland) {
  int best = -1;
  double best_cost = -kEps;
  for (int c = 0; c < t.cols(); ++c) {
    if (!allowed[c]) continue;
    double rc = t.at(t.rows(), c);
    if (rc < -kEps) {
      if (bland) return c;
      if (rc < best_cost) {
        best_cost = rc;
        best = c;
      }
    }
  }
  return best;
}

int pick_leaving(const Tableau& t, const std::vector<int>& basis, int pc) {
  int leave = -1;
  double best_ratio = 0.0;
  for (int r = 0; r < t.rows(); ++r) {
    double a = t.at(r, pc);
    if (a <= kEps) continue;
    double ratio = t.at(r, t.cols()) / a;
    if (leave < 0 || ratio < best_ratio - 1e-12 ||
        (std::abs(ratio - best_ratio) <= 1e-12 && basis[r] < basis[leave])) {
      leave = r;
      best_ratio = ratio;
    }
  }
  return leave;
}

enum class RunResult { kOptimal, kUnbounded, kIterationLimit };

RunResult run_simplex(Tableau& t, std::vector<int>& basis, const std::vector<bool>& allowed) {
  const int dantzig_budget = 500 + 20 * (t.rows() + t.cols());
  const int max_iter = 50 * dantzig_budget;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool bland = iter >= dantzig_budget;
    int pc = pick_entering(t, allowed, bland);
    if (pc < 0) return RunResult::kOptimal;
    int pr = pick_leaving(t, basis, pc);
    if (pr < 0) return RunResult::kUnbounded;
    t.pivot(pr, pc);
    basis[pr] = pc;
  }
  return RunResult::kIterationLimit;
}

}  // namespace

Solution solve(const LinearProgram& lp) {
  const int n = lp.var_count();

  // Fold finite upper bounds in as extra <= rows.
  std::vector<Constraint> rows;
  for (int r = 0; r < lp.constraint_count(); ++r) rows.push_back(lp.constraint(r));
  for (int v = 0; v < n; ++v) {
    if (lp.upper(v) < LinearProgram::kNoUpper)
      rows.push_back(Constraint{{{v, 1.0}}, Cmp::kLe, lp.upper(v)});
  }
  const int m = static_cast<int>(rows.size());

  // Normalize to rhs >= 0.
  std::vector<std::vector<double>> dense(m, std::vector<double>(n, 0.0));
  std::vector<double> rhs(m);
  std::vector<Cmp> cmp(m);
  for (int r = 0; r < m; ++r) {
    for (const Term& term : rows[r].terms) dense[r][term.var] += term.coeff;
    rhs[r] = rows[r].rhs;
    cmp[r] = rows[r].cmp;
    if (rhs[r] < 0.0) {
      for (double& c : dense[r]) c = -c;
      rhs[r] = -rhs[r];
      if (cmp[r] == Cmp::kLe)
        cmp[r] = Cmp::kGe;
      else if (cmp[r] == Cmp::kGe)
        cmp[r] = Cmp::kLe;
    }
  }

  int n_slack = 0;
  for (int r = 0; r < m; ++r)
    if (cmp[r] != Cmp::kEq) ++n_slack;
  int n_art = 0;
  for (int r = 0; r < m; ++r)
    if (cmp[r] != Cmp::kLe) ++n_art;

  const int total = n + n_slack + n_art;
  Tableau t(m, total);
  std::vector<int> basis(m, -1);
  std::vector<bool> is_artificial(total, false);

  int slack_at = n;
  int art_at = n + n_slack;
  for (int r = 0; r < m; ++r) {
    for (int v = 0; v < n; ++v) t.at(r, v) = dense[r][v];
    t.rhs(r) = rhs[r];
    if (cmp[r] == Cmp::kLe) {
      t.at(r, slack_at) = 1.0;
      basis[r] = slack_at++;
    } else if (cmp[r] == Cmp::kGe) {
      t.at(r, slack_at) = -1.0;
      ++slack_at;
      t.at(r, art_at) = 1.0;
      is_artificial[art_at] = true;
      basis[r] = art_at++;
    } else {
      t.at(r, art_at) = 1.0;
      is_artificial[art_at] = true;
      basis[r] = art_at++;
    }
  }

  Solution sol;
  std::vector<bool> allowed(total, true);

  if (n_art > 0) {
    // Phase 1: minimize the artificial sum.
    for (int c = 0; c < total; ++c) t.cost(c) = is_artificial[c] ? 1.0 : 0.0;
    t.cost(total) = 0.0;
    for (int r = 0; r < m; ++r) {
      if (!is_artificial[basis[r]]) continue;
      for (int c = 0; c <= total; ++c) t.at(m, c) -= t.at(r, c);
    }
    RunResult res = run_simplex(t, basis, allowed);
    if (res == RunResult::kIterationLimit) {
      sol.status = Status::kNumericalFailure;
      return sol;
    }
    double infeas = -t.at(m, total);
    if (infeas > kPhase1Tol) {
      sol.status = Status::kInfeasible;
      return sol;
    }
    // Pivot remaining artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (!is_artificial[basis[r]]) continue;
      int pc = -1;
      for (int c = 0; c < n + n_slack; ++c) {
        if (std::abs(t.at(r, c)) > kEps) {
          pc = c;
          break;
        }
      }
      if (pc >= 0) {
        t.pivot(r, pc);
        basis[r] = pc;
      }
    }
    for (int c = 0; c < total; ++c)
      if (is_artificial[c]) allowed[c] = false;
  }

  // Phase 2: minimize -c'x.
  for (int c = 0; c <= total; ++c) t.cost(c) = 0.0;
  for (int v = 0; v < n; ++v) t.cost(v) = -lp.objective_coeff(v);
  for (int r = 0; r < m; ++r) {
    double cb = basis[r] < n ? -lp.objective_coeff(basis[r]) : 0.0;
    if (cb == 0.0) continue;
    for (int c = 0; c <= total; ++c) t.at(m, c) -= cb * t.at(r, c);
  }
  RunResult res = run_simplex(t, basis, allowed);
  if (res == RunResult::kIterationLimit) {
    sol.status = Status::kNumericalFailure;
    return sol;
  }
  if (res == RunResult::kUnbounded) {
    sol.status = Status::kUnbounded;
    return sol;
  }

  sol.status = Status::kOptimal;
  sol.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n) sol.x[basis[r]] = t.at(r, total);
  }
  sol.objective = 0.0;
  for (int v = 0; v < n; ++v) sol.objective += lp.objective_coeff(v) * sol.x[v];
  return sol;
}

std::string to_lp_format(const LinearProgram& lp) {
  std::ostringstream os;
  os.precision(17);
  os << "Maximize\n obj:";
  bool any = false;
  for (int v = 0; v < lp.var_count(); ++v) {
    double c = lp.objective_coeff(v);
    if (c == 0.0) continue;
    os << (c >= 0 && any ? " + " : " ") << c << " " << lp.var_name(v);
    any = true;
  }
  if (!any) os << " 0";
  os << "\nSubject To\n";
  for (int r = 0; r < lp.constraint_count(); ++r) {
    const Constraint& row = lp.constraint(r);
    os << " c" << r << ":";
    for (size_t i = 0; i < row.terms.size(); ++i) {
      double c = row.terms[i].coeff;
      os << (c >= 0 && i > 0 ? " + " : " ") << c << " " << lp.var_name(row.terms[i].var);
    }
    const char* op = row.cmp == Cmp::kLe ? "<=" : (row.cmp == Cmp::kGe ? ">=" : "=");
    os << " " << op << " " << row.rhs << "\n";
  }
  os << "Bounds\n";
  for (int v = 0; v < lp.var_count(); ++v) {
    os << " 0 <= " << lp.var_name(v);
    if (lp.upper(v) < LinearProgram::kNoUpper) os << " <= " << lp.upper(v);
    os << "\n";
  }
  os << "End\n";
  return os.str();
}

}  // namespace terra::lp
