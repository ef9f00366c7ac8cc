// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace alr {

enum class ScheduleKind { kSingle, kStepDecay, kCyclic, kSgdr };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Baseline single-LR schedules, as pure epoch -> lr functions.
struct BaselineScheduleConfig {
  ScheduleKind kind = ScheduleKind::kSingle;
  double l_max = 0.01;
  double l_min = 0.001;
  int t_d = 40;       // step_decay: drop period
  double gamma = 0.1; // step_decay: multiplier per drop
  int cycles = 5;     // cyclic: triangles over the run
  int n_reset = 8;    // sgdr: restarts over the run
  int total_epochs = 50;

  void validate() const;
};

// LR for epoch e in [0, total_epochs). Referentially transparent.
//   single:     l_max
//   step_decay: l_max * gamma^floor(e / t_d)
//   cyclic:     triangular wave from l_max down to l_min at mid-cycle and back
//   sgdr:       l_max * (l_min/l_max)^(phase/period), reset to l_max each period
double lr_at(const BaselineScheduleConfig& cfg, int epoch);

}  // namespace alr
