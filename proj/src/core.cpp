#include "mwsla/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mwsla/errors.hpp"

namespace mwsla {

namespace {

// Neumaier compensated accumulation; long horizons sum millions of terms.
void accumulate(double& sum, double& comp, double value) {
  const double t = sum + value;
  if (std::abs(sum) >= std::abs(value)) {
    comp += (sum - t) + value;
  } else {
    comp += (value - t) + sum;
  }
  sum = t;
}

void require_length(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << " has length " << v.size() << ", expected " << n;
    throw StructuralError(os.str());
  }
}

}  // namespace

SlaVector::SlaVector(std::vector<double> beta) : beta_(std::move(beta)) {
  if (beta_.empty()) {
    throw StructuralError("SLA vector must have at least one user");
  }
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    if (!(beta_[i] >= 0.0) || !std::isfinite(beta_[i])) {
      throw DomainError("SLA of user " + std::to_string(i + 1) + " is negative or not finite");
    }
  }
  if (total() > 1.0 + kSumTolerance) {
    throw DomainError("SLA sum exceeds 1");
  }
}

double SlaVector::total() const { return std::accumulate(beta_.begin(), beta_.end(), 0.0); }

bool SlaVector::theory_applicable(double epsilon) const {
  const double floor = 2.0 * epsilon / static_cast<double>(users());
  return std::all_of(beta_.begin(), beta_.end(), [&](double b) { return b >= floor; });
}

ActiveSet ActiveSet::all(std::size_t users) {
  ActiveSet s(users);
  std::fill(s.mask_.begin(), s.mask_.end(), std::uint8_t{1});
  s.count_ = users;
  return s;
}

ActiveSet ActiveSet::of(std::size_t users, std::span<const std::size_t> members) {
  ActiveSet s(users);
  for (std::size_t i : members) s.insert(i);
  return s;
}

void ActiveSet::insert(std::size_t i) {
  if (i >= mask_.size()) throw StructuralError("active user index out of range");
  if (!mask_[i]) {
    mask_[i] = 1;
    ++count_;
  }
}

void ActiveSet::erase(std::size_t i) {
  if (i >= mask_.size()) throw StructuralError("active user index out of range");
  if (mask_[i]) {
    mask_[i] = 0;
    --count_;
  }
}

std::vector<std::size_t> ActiveSet::members() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

PolicyParams PolicyParams::canonical(double epsilon, double eta, std::size_t users,
                                     double empty_tolerance) {
  if (users == 0) throw StructuralError("policy needs at least one user");
  PolicyParams p;
  p.epsilon = epsilon;
  p.eta = eta;
  p.lambda = canonical_lambda(epsilon, users);
  p.empty_tolerance = empty_tolerance;
  p.lambda_canonical = true;
  return p;
}

PolicyParams PolicyParams::with_lambda(double lambda_override) const {
  PolicyParams p = *this;
  p.lambda = lambda_override;
  p.lambda_canonical = false;
  return p;
}

void PolicyParams::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 0.1)) {
    throw DomainError("epsilon must lie in (0, 1/10]");
  }
  if (!(eta > 0.0 && eta <= 1.0 / 3.0 + 1e-15)) {
    throw DomainError("eta must lie in (0, 1/3]");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("lambda must be positive");
  }
  if (!(empty_tolerance >= 0.0)) {
    throw DomainError("empty_tolerance must be non-negative");
  }
}

void LoadMatrix::append_row(std::span<const double> load) {
  if (data_.empty() && users_ == 0) users_ = load.size();
  require_length(load, users_, "load row");
  data_.insert(data_.end(), load.begin(), load.end());
}

double LoadMatrix::total() const {
  double sum = 0.0, comp = 0.0;
  for (double v : data_) accumulate(sum, comp, v);
  return sum + comp;
}

StepOutcome step(std::span<const double> queue, std::span<const double> allocation,
                 std::span<const double> load) {
  const std::size_t n = queue.size();
  require_length(allocation, n, "allocation");
  require_length(load, n, "load");
  StepOutcome out{std::vector<double>(n), QueueState(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double pending = load[i] + queue[i];
    out.work[i] = std::min(allocation[i], pending);
    out.queue[i] = std::max(0.0, pending - allocation[i]);
  }
  return out;
}

ActiveSet feedback(std::span<const double> queue, double tolerance) {
  ActiveSet active(queue.size());
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (queue[i] > tolerance) active.insert(i);
  }
  return active;
}

std::optional<std::vector<double>> MatrixLoadSource::next(const LoadContext&) {
  if (cursor_ >= loads_->steps()) return std::nullopt;
  auto row = loads_->row(cursor_++);
  return std::vector<double>(row.begin(), row.end());
}

SimulationTrace::SimulationTrace(SlaVector sla, std::string policy,
                                 std::vector<double> initial_queue, std::size_t stride)
    : sla_(std::move(sla)),
      policy_(std::move(policy)),
      users_(sla_.users()),
      stride_(stride),
      initial_queue_(std::move(initial_queue)) {
  if (stride_ == 0) throw StructuralError("trace stride must be at least 1");
  if (initial_queue_.empty()) initial_queue_.assign(users_, 0.0);
  require_length(initial_queue_, users_, "initial queue");
  final_queue_ = initial_queue_;
  work_totals_.assign(users_, 0.0);
  work_comp_.assign(users_, 0.0);
  load_totals_.assign(users_, 0.0);
  load_comp_.assign(users_, 0.0);
}

void SimulationTrace::append(std::size_t t, const ActiveSet& active,
                             std::span<const double> allocation, std::span<const double> work,
                             std::span<const double> queue_after, std::span<const double> load) {
  if (t != horizon_ + 1) {
    throw StructuralError("trace steps must be contiguous; got t=" + std::to_string(t) +
                          " after " + std::to_string(horizon_));
  }
  if (active.users() != users_) throw StructuralError("active set has wrong user count");
  require_length(allocation, users_, "allocation");
  require_length(work, users_, "work");
  require_length(queue_after, users_, "queue");
  require_length(load, users_, "load");

  for (std::size_t i = 0; i < users_; ++i) {
    accumulate(work_totals_[i], work_comp_[i], work[i]);
    accumulate(load_totals_[i], load_comp_[i], load[i]);
    accumulate(work_sum_, work_sum_comp_, work[i]);
  }
  horizon_ = t;
  final_queue_.assign(queue_after.begin(), queue_after.end());

  if ((t - 1) % stride_ != 0) return;
  steps_.push_back(t);
  active_.insert(active_.end(), active.mask().begin(), active.mask().end());
  allocation_.insert(allocation_.end(), allocation.begin(), allocation.end());
  work_.insert(work_.end(), work.begin(), work.end());
  queue_after_.insert(queue_after_.end(), queue_after.begin(), queue_after.end());
  load_.insert(load_.end(), load.begin(), load.end());
  cumulative_.push_back(work_sum_ + work_sum_comp_);
}

StepView SimulationTrace::record(std::size_t k) const {
  const std::size_t off = k * users_;
  return StepView{steps_.at(k),
                  {active_.data() + off, users_},
                  {allocation_.data() + off, users_},
                  {work_.data() + off, users_},
                  {queue_after_.data() + off, users_},
                  {load_.data() + off, users_},
                  cumulative_[k]};
}

std::span<const double> SimulationTrace::queue_before(std::size_t k) const {
  if (!complete()) throw StructuralError("queue_before needs a trace with stride 1");
  if (k == 0) return initial_queue_;
  return {queue_after_.data() + (k - 1) * users_, users_};
}

double SimulationTrace::total_work() const { return work_sum_ + work_sum_comp_; }

double SimulationTrace::total_load() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < users_; ++i) sum += load_totals_[i] + load_comp_[i];
  return sum;
}

SimulationTrace simulate(Policy& policy, LoadSource& loads, const SlaVector& sla,
                         std::size_t steps, const RunOptions& options) {
  const std::size_t n = sla.users();
  if (steps == 0) throw StructuralError("simulation needs at least one step");
  if (policy.users() != n) throw StructuralError("policy and SLA disagree on N");
  if (loads.users() != n) throw StructuralError("load source and SLA disagree on N");

  SimulationTrace trace(sla, policy.name(), options.initial_queue, options.stride);
  QueueState queue(trace.initial_queue().begin(), trace.initial_queue().end());

  for (std::size_t t = 1; t <= steps; ++t) {
    const ActiveSet active = feedback(queue, options.empty_tolerance);
    const Allocation h = policy.decide(active);
    if (h.size() != n) throw InvariantViolation("policy emitted an allocation of wrong length");
    double mass = 0.0;
    for (double v : h) {
      if (!(v >= 0.0)) {
        throw InvariantViolation("policy " + policy.name() + " emitted a negative share at t=" +
                                 std::to_string(t));
      }
      mass += v;
    }
    if (mass > 1.0 + kSumTolerance) {
      throw InvariantViolation("policy " + policy.name() + " over-allocated at t=" +
                               std::to_string(t));
    }

    auto load = loads.next(LoadContext{t, active, h});
    if (!load) {
      throw SimulationError("load source exhausted at t=" + std::to_string(t) + " of " +
                            std::to_string(steps));
    }
    require_length(*load, n, "load");
    for (double v : *load) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw SimulationError("negative or non-finite load at t=" + std::to_string(t));
      }
    }

    StepOutcome out = step(queue, h, *load);
    trace.append(t, active, h, out.work, out.queue, *load);
    queue = std::move(out.queue);
  }
  return trace;
}

}  // namespace mwsla
