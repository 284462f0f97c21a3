// SPDX-License-Identifier: Apache-2.0

#include "blrqr/task.hpp"

#include <sstream>

namespace blrqr {

std::string task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::DiagQR: return "DiagQR";
    case TaskKind::PanelQR: return "PanelQR";
    case TaskKind::UpdateQR: return "UpdateQR";
    case TaskKind::ApplyBlockReflector: return "ApplyBlockReflector";
    case TaskKind::ApplyTrapReflector: return "ApplyTrapReflector";
    case TaskKind::ApplyColumnReflector: return "ApplyColumnReflector";
    case TaskKind::MgsProject: return "MgsProject";
    case TaskKind::MgsUpdate: return "MgsUpdate";
  }
  return "Unknown";
}

int task_priority(TaskKind kind) {
  switch (kind) {
    case TaskKind::DiagQR:
    case TaskKind::PanelQR: return 3;
    case TaskKind::UpdateQR: return 2;
    default: return 1;
  }
}

std::string Task::label() const {
  std::ostringstream out;
  out << task_kind_name(kind) << "(" << k;
  if (i >= 0) out << "," << i;
  if (j >= 0) out << "," << j;
  out << ")";
  return out.str();
}

}  // namespace blrqr
