#pragma once

#include "modeclust/types.hpp"

#include <string_view>

namespace modeclust {

enum class CriticalKind { mode, saddle, minimum };

std::string_view to_string(CriticalKind kind) noexcept;

struct CriticalPoint {
  Point location;
  double value = 0.0;  // density at location
  int morse_index = 0;  // number of negative Hessian eigenvalues
  Vector hessian_eigenvalues;  // ascending
  Matrix hessian_eigenvectors;  // columns match hessian_eigenvalues
  bool degenerate = false;  // some eigenvalue within the degeneracy threshold of 0

  int dim() const noexcept { return static_cast<int>(location.size()); }
  CriticalKind kind() const noexcept {
    if (morse_index == dim()) return CriticalKind::mode;
    if (morse_index == 0) return CriticalKind::minimum;
    return CriticalKind::saddle;
  }
  bool is_mode() const noexcept { return kind() == CriticalKind::mode; }
};

}  // namespace modeclust
