#pragma once

#include "fedhead/matrix.hpp"
#include "fedhead/nn.hpp"

#include <array>
#include <vector>

namespace fedhead::distill {

// Loss weight, temperature amplitude, and the epoch horizon of the cosine
// temperature schedule.
struct DkdParams {
    double alpha = 0.5;
    double beta = 5.0;
    int t_max = 1;
};

// Probability of the labelled class vs. everything else, plus the
// renormalized distribution over the remaining classes.
struct SplitDistribution {
    std::array<double, 2> target_pair{};
    std::vector<double> nontarget;
};

// beta * (1 + cos(pi * epoch / t_max)) + 1. Non-increasing over epochs,
// exactly 1 at epoch == t_max.
double temperature(int epoch, const DkdParams& params);

SplitDistribution split_distribution(const std::vector<double>& logits, int label,
                                     double temp);

// sum p_i * ln(p_i / q_i), with 0 * ln(0/q) = 0.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Decoupled distillation for one sample:
//   alpha * [ KL(teacher target pair || student target pair)
//           + KL(teacher nontarget@temp || student nontarget@temp) ]
// The target-pair term uses temperature 1; teacher logits are constants.
// Optionally writes d(loss)/d(student_logits) into student_grad.
double dkd_loss(const std::vector<double>& student_logits,
                const std::vector<double>& teacher_logits, int label,
                const DkdParams& params, double temp,
                std::vector<double>* student_grad = nullptr);

// Batch form: mean over rows. With a tape, accumulates the gradient at the
// student logits onto the tape that produced them.
double dkd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                const std::vector<int>& labels, const DkdParams& params, double temp,
                nn::GradTape* tape = nullptr);

} // namespace fedhead::distill
