#include "degen/features.hpp"

namespace degen {

namespace {

void one_hot_view(const std::array<Cell, kViewCells>& view, Direction dir, bool has_key,
                  std::vector<double>& out) {
  for (int i = 0; i < kViewCells; ++i) {
    out[static_cast<std::size_t>(i * kNumCellKinds + static_cast<int>(view[static_cast<std::size_t>(i)]))] = 1.0;
  }
  constexpr int base = kViewCells * kNumCellKinds;
  out[static_cast<std::size_t>(base + static_cast<int>(dir))] = 1.0;
  out[base + 4] = has_key ? 1.0 : 0.0;
}

}  // namespace

int initial_gen_features(int size) { return (size - 2) * (size - 2) * kNumCellKinds + 1 + 3; }

void encode_student(const Observation& obs, std::vector<double>& out) {
  out.assign(kStudentFeatures, 0.0);
  one_hot_view(obs.view, obs.dir, obs.has_key, out);
}

void encode_teacher(const TeacherObservation& obs, std::vector<double>& out) {
  out.assign(kTeacherFeatures, 0.0);
  one_hot_view(obs.view, obs.dir, obs.has_key, out);
  out[kStudentFeatures] = obs.goal_placed ? 1.0 : 0.0;
  out[kStudentFeatures + 1] = obs.key_placed ? 1.0 : 0.0;
  out[kStudentFeatures + 2] = obs.door_placed ? 1.0 : 0.0;
}

void encode_initial_gen(const InitialGenObservation& obs, std::vector<double>& out) {
  const std::size_t cells = obs.interior.size();
  out.assign(cells * kNumCellKinds + 4, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    out[i * kNumCellKinds + static_cast<std::size_t>(obs.interior[i])] = 1.0;
  }
  const std::size_t base = cells * kNumCellKinds;
  out[base] = obs.n_steps > 0 ? static_cast<double>(obs.step) / obs.n_steps : 0.0;
  out[base + 1] = obs.goal_placed ? 1.0 : 0.0;
  out[base + 2] = obs.key_placed ? 1.0 : 0.0;
  out[base + 3] = obs.door_placed ? 1.0 : 0.0;
}

std::vector<std::uint8_t> student_mask(Family family) {
  return std::vector<std::uint8_t>(student_actions(family).size(), 1);
}

std::vector<std::uint8_t> teacher_mask_bytes(const TeacherMask& mask) {
  std::vector<std::uint8_t> out;
  out.reserve(kViewCells + kTeacherObjects);
  for (bool b : mask.cell) out.push_back(b ? 1 : 0);
  for (bool b : mask.object) out.push_back(b ? 1 : 0);
  return out;
}

std::vector<std::uint8_t> initial_gen_mask_bytes(const InitialGenMask& mask) {
  std::vector<std::uint8_t> out;
  out.reserve(mask.cell.size() + kTeacherObjects);
  for (bool b : mask.cell) out.push_back(b ? 1 : 0);
  for (bool b : mask.object) out.push_back(b ? 1 : 0);
  return out;
}

NetworkShape student_shape(Family family, int embed_dim, int hidden_dim) {
  return {kStudentFeatures, embed_dim, hidden_dim,
          {static_cast<int>(student_actions(family).size())}};
}

NetworkShape teacher_shape(int embed_dim, int hidden_dim) {
  return {kTeacherFeatures, embed_dim, hidden_dim, {kViewCells, kTeacherObjects}};
}

NetworkShape initial_gen_shape(int size, int embed_dim, int hidden_dim) {
  return {initial_gen_features(size), embed_dim, hidden_dim,
          {(size - 2) * (size - 2), kTeacherObjects}};
}

}  // namespace degen
