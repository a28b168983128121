#pragma once

// Domain types and the feedback -> decision -> update loop of the fluid
// queueing model. One divisible resource of capacity 1 is shared by N users;
// every user has an SLA share beta(i) and a backlog queue. Each step:
//   1. the decision maker sees which queues are non-empty (and nothing else),
//   2. the policy emits an allocation h_t,
//   3. the load L_t arrives, user i completes min(h_t(i), L_t(i) + Q_t(i))
//      and the remainder stays queued.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mwsla {

inline constexpr double kDefaultEmptyTolerance = 1e-12;
inline constexpr double kSumTolerance = 1e-12;

using Allocation = std::vector<double>;
using QueueState = std::vector<double>;

class SlaVector {
 public:
  // Throws StructuralError for N = 0 and DomainError for negative entries or
  // a total above 1.
  explicit SlaVector(std::vector<double> beta);

  std::size_t users() const { return beta_.size(); }
  double operator[](std::size_t i) const { return beta_[i]; }
  std::span<const double> values() const { return beta_; }
  double total() const;

  // Precondition of the SLA-satisfaction guarantees: beta(i) >= 2 eps / N.
  bool theory_applicable(double epsilon) const;

  bool operator==(const SlaVector&) const = default;

 private:
  std::vector<double> beta_;
};

// Users whose queue is non-empty at the decision instant.
class ActiveSet {
 public:
  explicit ActiveSet(std::size_t users = 0) : mask_(users, 0) {}

  static ActiveSet all(std::size_t users);
  static ActiveSet of(std::size_t users, std::span<const std::size_t> members);
  static ActiveSet of(std::size_t users, std::initializer_list<std::size_t> members) {
    return of(users, std::span<const std::size_t>(members.begin(), members.size()));
  }

  std::size_t users() const { return mask_.size(); }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool contains(std::size_t i) const { return mask_[i] != 0; }
  void insert(std::size_t i);
  void erase(std::size_t i);
  std::vector<std::size_t> members() const;
  std::span<const std::uint8_t> mask() const { return mask_; }

  bool operator==(const ActiveSet&) const = default;

 private:
  std::vector<std::uint8_t> mask_;
  std::size_t count_ = 0;
};

// Parameters of the multiplicative-weight policies.
struct PolicyParams {
  double epsilon = 0.02;
  double eta = 1.0 / 3.0;
  double lambda = 0.0;
  double empty_tolerance = kDefaultEmptyTolerance;
  bool lambda_canonical = true;

  // lambda = eps^2 / (8 N).
  static PolicyParams canonical(double epsilon, double eta, std::size_t users,
                                double empty_tolerance = kDefaultEmptyTolerance);
  static double canonical_lambda(double epsilon, std::size_t users) {
    return epsilon * epsilon / (8.0 * static_cast<double>(users));
  }
  PolicyParams with_lambda(double lambda_override) const;

  // eps in (0, 1/10], eta in (0, 1/3], lambda > 0, tolerance >= 0.
  void validate() const;
};

// T x N matrix of non-negative loads, row t-1 holding L_t.
class LoadMatrix {
 public:
  LoadMatrix() = default;
  LoadMatrix(std::size_t steps, std::size_t users)
      : users_(users), data_(steps * users, 0.0) {}

  std::size_t steps() const { return users_ == 0 ? 0 : data_.size() / users_; }
  std::size_t users() const { return users_; }

  std::span<const double> row(std::size_t k) const {
    return {data_.data() + k * users_, users_};
  }
  std::span<double> row(std::size_t k) { return {data_.data() + k * users_, users_}; }
  double at(std::size_t k, std::size_t i) const { return data_[k * users_ + i]; }
  double& at(std::size_t k, std::size_t i) { return data_[k * users_ + i]; }

  // First row fixes N when the matrix is empty.
  void append_row(std::span<const double> load);
  double total() const;
  std::span<const double> data() const { return data_; }

  bool operator==(const LoadMatrix&) const = default;

 private:
  std::size_t users_ = 0;
  std::vector<double> data_;
};

struct StepOutcome {
  std::vector<double> work;
  QueueState queue;
};

// w(i) = min(h(i), L(i) + Q(i)), Q'(i) = max(0, L(i) + Q(i) - h(i)).
StepOutcome step(std::span<const double> queue, std::span<const double> allocation,
                 std::span<const double> load);

// i is active iff q(i) > tolerance.
ActiveSet feedback(std::span<const double> queue, double tolerance = kDefaultEmptyTolerance);

// An online allocation rule. Policies see only the active set and their own
// state; they never observe loads or queue magnitudes.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual std::size_t users() const = 0;
  virtual Allocation decide(const ActiveSet& active) = 0;
  // Deep copy including state. Used by look-ahead load sources.
  virtual std::unique_ptr<Policy> clone() const = 0;
};

// What an adaptive load source may look at when producing L_t.
struct LoadContext {
  std::size_t t;
  const ActiveSet& active;
  std::span<const double> allocation;
};

class LoadSource {
 public:
  virtual ~LoadSource() = default;

  virtual std::size_t users() const = 0;
  // std::nullopt once the source is exhausted.
  virtual std::optional<std::vector<double>> next(const LoadContext& context) = 0;
};

class MatrixLoadSource final : public LoadSource {
 public:
  explicit MatrixLoadSource(std::shared_ptr<const LoadMatrix> loads)
      : loads_(std::move(loads)) {}
  explicit MatrixLoadSource(LoadMatrix loads)
      : loads_(std::make_shared<const LoadMatrix>(std::move(loads))) {}

  std::size_t users() const override { return loads_->users(); }
  std::optional<std::vector<double>> next(const LoadContext& context) override;

 private:
  std::shared_ptr<const LoadMatrix> loads_;
  std::size_t cursor_ = 0;
};

struct StepView {
  std::size_t t;
  std::span<const std::uint8_t> active;
  std::span<const double> allocation;
  std::span<const double> work;
  std::span<const double> queue_after;
  std::span<const double> load;
  double cumulative_work;
};

// Columnar record of a run. With stride s > 1 only steps t = 1, 1+s, 1+2s, ...
// are retained; totals and the final queue always cover every step.
class SimulationTrace {
 public:
  SimulationTrace(SlaVector sla, std::string policy, std::vector<double> initial_queue,
                  std::size_t stride = 1);

  void append(std::size_t t, const ActiveSet& active, std::span<const double> allocation,
              std::span<const double> work, std::span<const double> queue_after,
              std::span<const double> load);

  std::size_t users() const { return users_; }
  std::size_t records() const { return steps_.size(); }
  std::size_t horizon() const { return horizon_; }
  std::size_t stride() const { return stride_; }
  bool complete() const { return stride_ == 1; }

  StepView record(std::size_t k) const;
  // Queue at the start of the step held in record k.
  std::span<const double> queue_before(std::size_t k) const;

  std::span<const double> initial_queue() const { return initial_queue_; }
  std::span<const double> final_queue() const { return final_queue_; }
  std::span<const double> work_totals() const { return work_totals_; }
  std::span<const double> load_totals() const { return load_totals_; }
  double total_work() const;
  double total_load() const;

  const SlaVector& sla() const { return sla_; }
  const std::string& policy() const { return policy_; }

  std::map<std::string, std::string> params;

 private:
  SlaVector sla_;
  std::string policy_;
  std::size_t users_;
  std::size_t stride_;
  std::size_t horizon_ = 0;

  std::vector<std::size_t> steps_;
  std::vector<std::uint8_t> active_;
  std::vector<double> allocation_;
  std::vector<double> work_;
  std::vector<double> queue_after_;
  std::vector<double> load_;
  std::vector<double> cumulative_;

  std::vector<double> initial_queue_;
  std::vector<double> final_queue_;
  std::vector<double> work_totals_;
  std::vector<double> work_comp_;
  std::vector<double> load_totals_;
  std::vector<double> load_comp_;
  double work_sum_ = 0.0;
  double work_sum_comp_ = 0.0;
};

struct RunOptions {
  double empty_tolerance = kDefaultEmptyTolerance;
  std::size_t stride = 1;
  // Q_1; zeros when empty.
  std::vector<double> initial_queue;
};

// Drives `policy` against `loads` for `steps` steps. Throws SimulationError if
// the source is exhausted early and InvariantViolation if the policy emits an
// infeasible allocation.
SimulationTrace simulate(Policy& policy, LoadSource& loads, const SlaVector& sla,
                         std::size_t steps, const RunOptions& options = {});

}  // namespace mwsla
