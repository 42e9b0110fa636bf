#ifndef TERRA_CORE_LP_HPP
#define TERRA_CORE_LP_HPP

#include <string>
#include <vector>

namespace terra::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

enum class Cmp { kLe, kEq, kGe };

struct Term {
  int var;
  double coeff;
};

struct Constraint {
  std::vector<Term> terms;
  Cmp cmp = Cmp::kLe;
  double rhs = 0.0;
};

// Standard-form LP: maximize c'x subject to rows, x >= 0 (optional upper
// bounds per variable). Callers normalize their data; coefficients must be
// finite.
class LinearProgram {
 public:
  int add_variable(std::string name, double upper = kNoUpper);
  void set_objective(int var, double coeff);
  int add_constraint(std::vector<Term> terms, Cmp cmp, double rhs);

  int var_count() const { return static_cast<int>(names_.size()); }
  int constraint_count() const { return static_cast<int>(rows_.size()); }
  const std::string& var_name(int v) const { return names_[v]; }
  double upper(int v) const { return uppers_[v]; }
  double objective_coeff(int v) const { return obj_[v]; }
  const Constraint& constraint(int r) const { return rows_[r]; }

  static constexpr double kNoUpper = 1e300;

 private:
  std::vector<std::string> names_;
  std::vector<double> uppers_;
  std::vector<double> obj_;
  std::vector<Constraint> rows_;
};

struct Solution {
  Status status = Status::kNumericalFailure;
  double objective = 0.0;
  std::vector<double> x;
};

// Dense two-phase simplex. Pivot choice is Dantzig with smallest-index tie
// break, falling back to Bland's rule after a fixed iteration budget, so the
// result is bit-deterministic for identical input.
Solution solve(const LinearProgram& lp);

// Debug dump in the textual "LP file" format accepted by common solvers.
std::string to_lp_format(const LinearProgram& lp);

}  // namespace terra::lp

#endif
