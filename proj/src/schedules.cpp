// SPDX-License-Identifier: Apache-2.0
#include "alr/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace alr {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "single") return ScheduleKind::kSingle;
  if (s == "step_decay") return ScheduleKind::kStepDecay;
  if (s == "cyclic") return ScheduleKind::kCyclic;
  if (s == "sgdr") return ScheduleKind::kSgdr;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kSingle: return "single";
    case ScheduleKind::kStepDecay: return "step_decay";
    case ScheduleKind::kCyclic: return "cyclic";
    case ScheduleKind::kSgdr: return "sgdr";
  }
  return "?";
}

void BaselineScheduleConfig::validate() const {
  if (total_epochs < 1) throw std::invalid_argument("total_epochs must be >= 1");
  if (!(l_max > 0.0)) throw std::invalid_argument("l_max must be positive");
  switch (kind) {
    case ScheduleKind::kSingle:
      break;
    case ScheduleKind::kStepDecay:
      if (t_d < 1) throw std::invalid_argument("step_decay needs t_d >= 1");
      if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("step_decay needs gamma in (0, 1)");
      break;
    case ScheduleKind::kCyclic:
      if (!(l_min > 0.0 && l_min <= l_max)) throw std::invalid_argument("cyclic needs 0 < l_min <= l_max");
      if (cycles < 1) throw std::invalid_argument("cyclic needs cycles >= 1");
      if (total_epochs % cycles != 0)
        throw std::invalid_argument("cyclic needs total_epochs divisible by cycles");
      break;
    case ScheduleKind::kSgdr:
      if (!(l_min > 0.0 && l_min <= l_max)) throw std::invalid_argument("sgdr needs 0 < l_min <= l_max");
      if (n_reset < 1) throw std::invalid_argument("sgdr needs n_reset >= 1");
      if (total_epochs % n_reset != 0)
        throw std::invalid_argument("sgdr needs total_epochs divisible by n_reset");
      break;
  }
}

double lr_at(const BaselineScheduleConfig& cfg, int epoch) {
  cfg.validate();
  if (epoch < 0 || epoch >= cfg.total_epochs)
    throw std::invalid_argument("epoch outside [0, total_epochs)");
  switch (cfg.kind) {
    case ScheduleKind::kSingle:
      return cfg.l_max;
    case ScheduleKind::kStepDecay: {
      double lr = cfg.l_max;
      for (int d = 0; d < epoch / cfg.t_d; ++d) lr *= cfg.gamma;
      return lr;
    }
    case ScheduleKind::kCyclic: {
      const int period = cfg.total_epochs / cfg.cycles;
      const int pos = epoch % period;
      if (pos == 0) return cfg.l_max;
      if (2 * pos == period) return cfg.l_min;
      const double x = static_cast<double>(pos) / static_cast<double>(period);
      return cfg.l_max - (cfg.l_max - cfg.l_min) * (1.0 - std::abs(2.0 * x - 1.0));
    }
    case ScheduleKind::kSgdr: {
      const int period = cfg.total_epochs / cfg.n_reset;
      const int pos = epoch % period;
      if (pos == 0) return cfg.l_max;
      const double frac = static_cast<double>(pos) / static_cast<double>(period);
      return cfg.l_max * std::pow(cfg.l_min / cfg.l_max, frac);
    }
  }
  throw std::logic_error("unreachable schedule kind");
}

}  // namespace alr
