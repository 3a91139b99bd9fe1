#pragma once

#include <cstdint>
#include <vector>

#include "degen/degen_teacher.hpp"
#include "degen/gridworld.hpp"
#include "degen/network.hpp"

namespace degen {

/// One-hot cell kind per view cell, then one-hot direction, then has_key.
inline constexpr int kStudentFeatures = kViewCells * kNumCellKinds + 4 + 1;
/// Student layout plus goal/key/door placed flags.
inline constexpr int kTeacherFeatures = kStudentFeatures + 3;

int initial_gen_features(int size);

void encode_student(const Observation& obs, std::vector<double>& out);
void encode_teacher(const TeacherObservation& obs, std::vector<double>& out);
/// Interior one-hot, generation progress, placed flags.
void encode_initial_gen(const InitialGenObservation& obs, std::vector<double>& out);

/// Every action of the family's set is always legal for the student.
std::vector<std::uint8_t> student_mask(Family family);
/// 25 cell entries followed by 5 object entries.
std::vector<std::uint8_t> teacher_mask_bytes(const TeacherMask& mask);
std::vector<std::uint8_t> initial_gen_mask_bytes(const InitialGenMask& mask);

NetworkShape student_shape(Family family, int embed_dim, int hidden_dim);
NetworkShape teacher_shape(int embed_dim, int hidden_dim);
NetworkShape initial_gen_shape(int size, int embed_dim, int hidden_dim);

}  // namespace degen
