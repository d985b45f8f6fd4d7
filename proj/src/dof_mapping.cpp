#include "admc/dof_mapping.hpp"

#include <algorithm>
#include <string>

#include "admc/error.hpp"

namespace admc {
namespace {

// Scales the block [first, first + 3) down uniformly so all entries fit [-1, 1].
void fit_block(Vec7& v, std::size_t first) {
  double peak = 0.0;
  for (std::size_t i = first; i < first + 3; ++i) peak = std::max(peak, std::abs(v[i]));
  if (peak > 1.0) {
    for (std::size_t i = first; i < first + 3; ++i) v[i] /= peak;
  }
}

void validate_indices(std::span<const int> idx) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int c = idx[i];
    if (c == kNoColumn) continue;
    if (c < 0 || c >= static_cast<int>(DofMatrix::kColumns)) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "column index " + std::to_string(c) + " outside [0, 7)");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (idx[j] == c) {
        throw Error(ErrorCode::kDuplicateIndex,
                    "column index " + std::to_string(c) + " selected twice");
      }
    }
  }
}

}  // namespace

Vec7 as_vec7(const AdaptiveAxis& axis, const AxisScale& scale) {
  const Vec3 t = axis.translation / scale.vel_trans;
  const Vec3 r = axis.rotation.rotation_vector() / scale.vel_rot;
  Vec7 v{{t.x, t.y, t.z, r.x, r.y, r.z, std::clamp(axis.gripper, -1.0, 1.0)}};
  fit_block(v, 0);
  fit_block(v, 3);
  return v;
}

AdaptiveAxis from_vec7(const Vec7& v, const AxisScale& scale) {
  return {Vec3{v[0], v[1], v[2]} * scale.vel_trans,
          Rotation::from_rotation_vector(Vec3{v[3], v[4], v[5]} * scale.vel_rot), v[6]};
}

DofMatrix::DofMatrix(const std::array<Vec7, kColumns>& columns) : columns_(columns) {
  for (const auto& c : columns_) {
    for (double e : c.v) {
      if (!std::isfinite(e) || e < -1.0 || e > 1.0) {
        throw Error(ErrorCode::kInvalidConfig, "mapping entry outside [-1, 1]");
      }
    }
  }
}

DofMatrix identity_matrix() {
  std::array<Vec7, DofMatrix::kColumns> cols;
  for (std::size_t i = 0; i < DofMatrix::kColumns; ++i) cols[i] = Vec7::unit(i);
  return DofMatrix(cols);
}

Vec7 ControlState::bound_column(std::size_t i) const {
  const int c = active_subset.at(i);
  if (c == kNoColumn) return {};
  return matrix.column(static_cast<std::size_t>(c));
}

ControlState select_subset(const DofMatrix& m, std::span<const int> idx,
                           std::size_t input_dofs) {
  if (idx.size() != input_dofs || input_dofs > DofMatrix::kColumns) {
    throw Error(ErrorCode::kDimensionMismatch,
                "subset of length " + std::to_string(idx.size()) + " for " +
                    std::to_string(input_dofs) + " input DoFs");
  }
  validate_indices(idx);
  return {m, std::vector<int>(idx.begin(), idx.end()), 0};
}

ControlState mode_switch(const ControlState& s, std::span<const int> new_idx) {
  ControlState next = s;
  next.active_subset =
      select_subset(s.matrix, new_idx, s.input_dofs()).active_subset;
  if (!std::ranges::equal(next.active_subset, s.active_subset)) ++next.mode_switch_count;
  return next;
}

ControlState refresh_matrix(const ControlState& s, const DofMatrix& m) {
  ControlState next = s;
  next.matrix = m;
  return next;
}

Vec7 apply_input(const ControlState& s, std::span<const double> u) {
  if (u.size() != s.input_dofs()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input of length " + std::to_string(u.size()) + " for " +
                    std::to_string(s.input_dofs()) + " input DoFs");
  }
  Vec7 out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (s.active_subset[i] == kNoColumn || u[i] == 0.0) continue;
    out = out + s.bound_column(i) * u[i];
  }
  for (double& c : out.v) c = std::clamp(c, -1.0, 1.0);
  return out;
}

ModeRing classic_control_config() {
  return {{0, 1}, {2, 3}, {4, 5}, {6, kNoColumn}};
}

int ring_position(const ModeRing& ring, std::span<const int> subset) {
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (std::ranges::equal(ring[i], subset)) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace admc
