#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mwsla/core.hpp"

namespace mwsla {

struct GammaParams {
  double shape = 1.0;  // k
  double scale = 1.0;  // theta

  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }
};

// One Gamma(k, theta) draw. Throws DomainError unless k, theta > 0.
double sample_gamma(const GammaParams& params, std::mt19937_64& rng);

// One period of the synthetic Gamma workload. Every listed user demands a
// Gamma(shape, mean / shape) amount per step. With SLA-proportional means a
// user's mean is beta(i) / sum of the listed users' beta, otherwise 1 / |users|.
// If `bulk_user` is set, that user instead deposits period_length times its
// mean as one Gamma-distributed job on the period's first step, and nobody
// else demands anything on that step.
struct GammaPeriod {
  std::vector<std::size_t> users;  // 0-based
  std::optional<std::size_t> bulk_user;
  bool sla_proportional = true;
};

struct SyntheticGammaConfig {
  std::size_t steps = 60000;
  std::uint64_t seed = 1;
  double shape = 2000.0;
  // Empty means the default six-period schedule for three users:
  // (2 bulk, 3), (1 bulk, 2), (1 bulk, 3) with SLA-proportional means, then
  // (2, 3), (1, 2), (1, 3) with mean 1/2 each.
  std::vector<GammaPeriod> periods;
};

std::vector<GammaPeriod> default_gamma_schedule();

// Throws ConfigError if steps is not divisible by the number of periods or the
// schedule references users outside the SLA.
LoadMatrix synthetic_gamma(const SlaVector& sla, const SyntheticGammaConfig& config);

// Expected total load of synthetic_gamma and its variance (from the Gamma moments).
struct LoadMoments {
  double mean = 0.0;
  double variance = 0.0;
};
LoadMoments synthetic_gamma_moments(const SlaVector& sla, const SyntheticGammaConfig& config);

// Three users: user 1 demands 1 on the first and last thirds of the horizon,
// users 2 and 3 demand 1 - L_t(1). Throws ConfigError unless steps % 3 == 0.
LoadMatrix example1_instance(std::size_t steps);

// Randomised loads for invariant fuzzing: each user independently demands
// Gamma(2, mean / 2) with probability p, else nothing.
struct FuzzLoadConfig {
  std::size_t users = 3;
  std::size_t steps = 10000;
  std::uint64_t seed = 1;
  double probability = 0.5;
  double mean = 1.0;
};
LoadMatrix fuzz_loads(const FuzzLoadConfig& config);

// Trace CSV: header `t,user1,...,userN`, then one line per step with the
// integer step index (1, 2, ... contiguous) and N non-negative decimals.
LoadMatrix read_trace_csv(const std::filesystem::path& path);
LoadMatrix parse_trace_csv(const std::string& contents);
std::string format_trace_csv(const LoadMatrix& loads);
void write_trace_csv(const std::filesystem::path& path, const LoadMatrix& loads);

// Adaptive two-user load sequence that forces any deterministic, feedback-only
// policy with sum h <= 1 to fall behind the offline optimum. Loads always sum
// to 1, so the offline optimum completes exactly T work and the policy's
// shortfall equals its final backlog.
//
// Step 1 loads the user with the smaller share. After that the horizon is cut
// into phases, each starting with one queue empty (the "watched" user) and
// the other holding the whole backlog q.
//   * If the watched share is already >= 1/2, load (0, 1) on the loaded side
//     and close the phase.
//   * Otherwise open with L = (h_w + eps, 1 - h_w - eps) so that the watched
//     queue holds eps and both queues stay non-empty. While both are
//     non-empty the policy's next allocations are fixed; a replica of the
//     policy predicts them.
//       (a) If the watched share reaches 1/2 before the drain below would
//           finish, echo L = (h_w, 1 - h_w) until then and close with (0, 1).
//       (b) Otherwise load (1, 0) until the loaded queue would empty, top it
//           up to exactly eps' with one balancing load, then load (1, 0)
//           until it drains.
// Every phase adds at least 1/4 to the total backlog and ends with one queue
// empty; both are checked at each phase boundary (InvariantViolation).
class AdversarialLoadSource final : public LoadSource {
 public:
  struct Phase {
    std::size_t start = 0;   // first step of the phase
    std::size_t end = 0;     // step after the last one
    std::size_t loaded = 0;  // user holding the backlog at the start
    char branch = '0';       // 'i' first step, '0' immediate close, 'a' echo, 'b' drain
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
    double backlog_before = 0.0;
    double backlog_after = 0.0;
  };

  struct State {
    std::size_t phase = 0;  // index of the phase in progress
    std::size_t loaded = 0;
    std::size_t step_in_phase = 0;
    double epsilon = 0.0;
    double epsilon_prime = 0.0;
  };

  // `replica` must be a fresh copy of the policy being driven, which must be
  // deterministic. Throws StructuralError unless N = 2.
  AdversarialLoadSource(std::unique_ptr<Policy> replica, std::size_t steps,
                        double empty_tolerance = kDefaultEmptyTolerance);

  std::size_t users() const override { return 2; }
  // Throws SimulationError if the driven policy departs from the replica.
  std::optional<std::vector<double>> next(const LoadContext& context) override;

  const std::vector<Phase>& phases() const { return phases_; }
  State state() const;
  const LoadMatrix& emitted() const { return emitted_; }
  std::span<const double> shadow_queue() const { return queue_; }
  double backlog() const { return queue_[0] + queue_[1]; }

 private:
  enum class Mode { kStart, kEcho, kDrain, kTail };

  std::vector<double> plan(std::size_t t, std::span<const double> h);
  void close_phase(std::size_t t_next);
  void choose_branch(std::size_t t);

  std::unique_ptr<Policy> replica_;
  std::size_t steps_;
  double tolerance_;
  std::vector<double> queue_{0.0, 0.0};

  Mode mode_ = Mode::kStart;
  std::size_t watched_ = 1;
  std::size_t loaded_ = 0;
  std::size_t echo_until_ = 0;  // step at which branch (a) closes
  bool closing_ = false;        // the step being planned ends the phase
  bool first_step_ = true;

  std::vector<Phase> phases_;
  Phase current_;
  LoadMatrix emitted_;
};

}  // namespace mwsla
