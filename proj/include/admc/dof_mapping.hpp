/**
 * @file dof_mapping.hpp
 * @brief The DoF-mapping matrix, its active subset and mode switching.
 *
 * The full matrix holds seven candidate mappings (columns), each a blend of
 * the seven cardinal DoFs. The active subset binds one column per input DoF;
 * exchanging that subset is a mode switch. Column contents may be refreshed
 * every tick by a rule engine without it counting as a switch.
 */

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "admc/core_math.hpp"

namespace admc {

/// Per-tick motion maxima used to normalize an AdaptiveAxis into a Vec7.
struct AxisScale {
  double vel_trans = 0.004;  ///< meters per tick
  double vel_rot = 0.02;     ///< radians per tick
};

/// One column of the mapping matrix in physical units.
struct AdaptiveAxis {
  Vec3 translation;     ///< gripper frame, meters per tick
  Rotation rotation;    ///< gripper frame, per tick
  double gripper = 0.0; ///< +1 closes, -1 opens

  bool operator==(const AdaptiveAxis&) const = default;
};

/// Normalized representation: translation / vel_trans, rotation vector /
/// vel_rot, each block uniformly scaled down if a component would leave
/// [-1, 1] so its direction is preserved.
Vec7 as_vec7(const AdaptiveAxis& axis, const AxisScale& scale);
/// Inverse of as_vec7 for unsaturated axes.
AdaptiveAxis from_vec7(const Vec7& v, const AxisScale& scale);

class DofMatrix {
 public:
  static constexpr std::size_t kColumns = 7;

  DofMatrix() = default;
  /// Throws Error(kInvalidConfig) if an entry is outside [-1, 1] or non-finite.
  explicit DofMatrix(const std::array<Vec7, kColumns>& columns);

  const Vec7& column(std::size_t i) const { return columns_.at(i); }
  const std::array<Vec7, kColumns>& columns() const { return columns_; }
  bool operator==(const DofMatrix&) const = default;

 private:
  std::array<Vec7, kColumns> columns_{};
};

DofMatrix identity_matrix();

/// Subset slot that binds the zero column (an empty input DoF).
constexpr int kNoColumn = -1;

struct ControlState {
  DofMatrix matrix;
  std::vector<int> active_subset;
  int mode_switch_count = 0;

  std::size_t input_dofs() const { return active_subset.size(); }
  /// Column bound to input slot `i`; the zero vector for kNoColumn.
  Vec7 bound_column(std::size_t i) const;
};

/// Throws Error(kDimensionMismatch) when idx.size() != input_dofs,
/// Error(kIndexOutOfRange) or Error(kDuplicateIndex) on invalid indices.
ControlState select_subset(const DofMatrix& m, std::span<const int> idx,
                           std::size_t input_dofs);

/// Replaces the active subset; counts a switch iff it differs from the old one.
ControlState mode_switch(const ControlState& s, std::span<const int> new_idx);

/// Installs a freshly computed matrix without touching the subset or count.
ControlState refresh_matrix(const ControlState& s, const DofMatrix& m);

/// sum_i u[i] * column(active_subset[i]), clamped component-wise to [-1, 1]
/// after summation. Throws Error(kDimensionMismatch) if |u| != n.
Vec7 apply_input(const ControlState& s, std::span<const double> u);

using ModeRing = std::vector<std::vector<int>>;

/// Jaco-style two-axis cardinal modes over the identity matrix:
/// (tx, ty), (tz, roll), (pitch, yaw), (gripper, none).
ModeRing classic_control_config();

/// Index of `subset` in `ring`, or -1 when it is not one of the ring's modes.
int ring_position(const ModeRing& ring, std::span<const int> subset);

}  // namespace admc
