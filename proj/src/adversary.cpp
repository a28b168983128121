#include <algorithm>
#include <cmath>
#include <sstream>

#include "mwsla/errors.hpp"
#include "mwsla/workloads.hpp"

namespace mwsla {

namespace {

constexpr double kMinGrowth = 0.25;
constexpr double kGrowthSlack = 1e-9;
// Drain steps stop once the loaded queue is within this of the share, so that
// rounding residue is absorbed by the balancing load instead of lingering as a
// queue just above the emptiness tolerance.
constexpr double kDrainMargin = 1e-9;

// Queue after one step, with the same arithmetic as step().
double advance(double queue, double load, double share) {
  return std::max(0.0, load + queue - share);
}

// Load on the loaded side that leaves exactly eps' (= min(1/8, q/2)) queued.
double balancing_load(double share, double queue) {
  const double eps_prime = std::min(0.125, queue / 2.0);
  return std::max(0.0, share - queue + eps_prime);
}

}  // namespace

AdversarialLoadSource::AdversarialLoadSource(std::unique_ptr<Policy> replica, std::size_t steps,
                                             double empty_tolerance)
    : replica_(std::move(replica)), steps_(steps), tolerance_(empty_tolerance) {
  if (!replica_) throw StructuralError("adversary needs a policy replica");
  if (replica_->users() != 2) {
    throw StructuralError("the adversary supports N=2 only, got N=" +
                          std::to_string(replica_->users()));
  }
}

AdversarialLoadSource::State AdversarialLoadSource::state() const {
  State s;
  s.phase = phases_.size();
  s.loaded = loaded_;
  s.step_in_phase = emitted_.steps() + 1 - (current_.start ? current_.start : 1);
  s.epsilon = current_.epsilon;
  s.epsilon_prime = current_.epsilon_prime;
  return s;
}

std::optional<std::vector<double>> AdversarialLoadSource::next(const LoadContext& context) {
  const std::size_t t = context.t;
  if (t > steps_) return std::nullopt;
  if (t != emitted_.steps() + 1) throw SimulationError("adversary steps must be consecutive");
  if (!(context.active == feedback(queue_, tolerance_))) {
    throw SimulationError("adversary shadow queue diverged from the simulation at t=" +
                          std::to_string(t));
  }
  const Allocation mirrored = replica_->decide(context.active);
  if (!std::equal(mirrored.begin(), mirrored.end(), context.allocation.begin(),
                  context.allocation.end())) {
    throw SimulationError("driven policy departed from its replica at t=" + std::to_string(t) +
                          "; the adversary needs a deterministic policy");
  }

  std::vector<double> load = plan(t, context.allocation);
  for (std::size_t i = 0; i < 2; ++i) {
    queue_[i] = advance(queue_[i], load[i], context.allocation[i]);
  }
  emitted_.append_row(load);

  if (mode_ == Mode::kStart && !closing_) choose_branch(t);
  if (mode_ == Mode::kTail && queue_[loaded_] <= tolerance_) closing_ = true;
  if (closing_) close_phase(t + 1);
  return load;
}

std::vector<double> AdversarialLoadSource::plan(std::size_t t, std::span<const double> h) {
  std::vector<double> load(2, 0.0);
  const std::size_t w = watched_, l = loaded_;
  closing_ = false;

  if (first_step_) {
    first_step_ = false;
    loaded_ = h[0] <= h[1] ? 0 : 1;
    watched_ = 1 - loaded_;
    current_ = Phase{t, 0, loaded_, 'i', 0.0, 0.0, backlog(), 0.0};
    load[loaded_] = 1.0;
    closing_ = true;
    return load;
  }

  switch (mode_) {
    case Mode::kStart:
      current_ = Phase{t, 0, l, '0', 0.0, 0.0, backlog(), 0.0};
      if (h[w] >= 0.5) {
        load[l] = 1.0;
        closing_ = true;
        return load;
      }
      current_.epsilon = std::min(0.125, (1.0 - h[w]) / 2.0);
      load[w] = h[w] + current_.epsilon;
      load[l] = 1.0 - load[w];
      return load;

    case Mode::kEcho:
      if (t == echo_until_) {
        load[l] = 1.0;
        closing_ = true;
      } else {
        load[w] = h[w];
        load[l] = 1.0 - h[w];
      }
      return load;

    case Mode::kDrain:
      if (queue_[l] - h[l] > std::max(tolerance_, kDrainMargin)) {
        load[w] = 1.0;
      } else {
        current_.epsilon_prime = std::min(0.125, queue_[l] / 2.0);
        load[l] = balancing_load(h[l], queue_[l]);
        load[w] = 1.0 - load[l];
        mode_ = Mode::kTail;
      }
      return load;

    case Mode::kTail:
      load[w] = 1.0;
      return load;
  }
  return load;
}

void AdversarialLoadSource::choose_branch(std::size_t t) {
  // Both queues are non-empty from here until the phase ends, so the policy's
  // allocations do not depend on which branch is taken.
  const std::size_t w = watched_, l = loaded_;
  auto probe = replica_->clone();
  const ActiveSet both = ActiveSet::all(2);
  double queue = queue_[l];
  bool draining = true;
  for (std::size_t s = t + 1; s <= steps_; ++s) {
    const Allocation h = probe->decide(both);
    if (h[w] >= 0.5) {
      current_.branch = 'a';
      echo_until_ = s;
      mode_ = Mode::kEcho;
      return;
    }
    if (draining && queue - h[l] > std::max(tolerance_, kDrainMargin)) {
      queue = advance(queue, 0.0, h[l]);
    } else if (draining) {
      queue = advance(queue, balancing_load(h[l], queue), h[l]);
      draining = false;
      if (queue <= tolerance_) break;
    } else {
      queue = advance(queue, 0.0, h[l]);
      if (queue <= tolerance_) break;
    }
  }
  current_.branch = 'b';
  mode_ = Mode::kDrain;
}

void AdversarialLoadSource::close_phase(std::size_t t_next) {
  current_.end = t_next;
  current_.backlog_after = backlog();
  const double growth = current_.backlog_after - current_.backlog_before;
  if (std::min(queue_[0], queue_[1]) > tolerance_) {
    std::ostringstream os;
    os << "adversary phase " << phases_.size() + 1 << " ended with both queues non-empty";
    throw InvariantViolation(os.str());
  }
  if (growth < kMinGrowth - kGrowthSlack) {
    std::ostringstream os;
    os << "adversary phase " << phases_.size() + 1 << " (branch " << current_.branch
       << ") grew the backlog by " << growth << " < 1/4";
    throw InvariantViolation(os.str());
  }
  phases_.push_back(current_);
  loaded_ = queue_[0] >= queue_[1] ? 0 : 1;
  watched_ = 1 - loaded_;
  mode_ = Mode::kStart;
  closing_ = false;
}

}  // namespace mwsla
