#include "fedhead/distill.hpp"

#include "fedhead/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fedhead::distill {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kProbFloor = 1e-300;

void check_instance(std::size_t classes, int label) {
    if (classes < 2) {
        throw InvalidArgument("distill: need at least 2 classes, got " +
                              std::to_string(classes));
    }
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
        throw InvalidArgument("distill: label " + std::to_string(label) + " out of range");
    }
}

// Temperature log-softmax over the full logit vector.
std::vector<double> log_softmax(const std::vector<double>& z, double temp) {
    std::vector<double> lp(z.size());
    double m = -std::numeric_limits<double>::infinity();
    for (double v : z) m = std::max(m, v / temp);
    double acc = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        lp[j] = z[j] / temp - m;
        acc += std::exp(lp[j]);
    }
    const double log_total = std::log(acc);
    for (auto& v : lp) v -= log_total;
    return lp;
}

// Temperature log-softmax over all classes except `label`.
std::vector<double> log_softmax_nontarget(const std::vector<double>& z, int label,
                                          double temp) {
    std::vector<double> sub;
    sub.reserve(z.size() - 1);
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (static_cast<int>(j) != label) sub.push_back(z[j]);
    }
    return log_softmax(sub, temp);
}

} // namespace

double temperature(int epoch, const DkdParams& params) {
    if (params.t_max < 1) throw InvalidArgument("temperature: t_max must be >= 1");
    if (params.beta < 0.0) throw InvalidArgument("temperature: beta must be >= 0");
    if (epoch < 1 || epoch > params.t_max) {
        throw InvalidArgument("temperature: epoch " + std::to_string(epoch) +
                              " outside [1, " + std::to_string(params.t_max) + "]");
    }
    const double phase = kPi * static_cast<double>(epoch) / static_cast<double>(params.t_max);
    return params.beta * (1.0 + std::cos(phase)) + 1.0;
}

SplitDistribution split_distribution(const std::vector<double>& logits, int label,
                                     double temp) {
    check_instance(logits.size(), label);
    if (!(temp > 0.0)) throw InvalidArgument("split_distribution: temperature must be > 0");

    SplitDistribution split;
    const auto lp = log_softmax(logits, temp);
    const double p_target = std::exp(lp[static_cast<std::size_t>(label)]);
    split.target_pair = {p_target, 1.0 - p_target};

    const auto lp_nt = log_softmax_nontarget(logits, label, temp);
    split.nontarget.resize(lp_nt.size());
    for (std::size_t j = 0; j < lp_nt.size(); ++j) split.nontarget[j] = std::exp(lp_nt[j]);
    return split;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) {
        throw InvalidArgument("kl_divergence: length mismatch, " + std::to_string(p.size()) +
                              " vs " + std::to_string(q.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        total += p[i] * std::log(p[i] / q[i]);
    }
    // Rounding can leave a tiny negative residue when p ~ q.
    return std::max(total, 0.0);
}

double dkd_loss(const std::vector<double>& student_logits,
                const std::vector<double>& teacher_logits, int label,
                const DkdParams& params, double temp, std::vector<double>* student_grad) {
    check_instance(student_logits.size(), label);
    if (student_logits.size() != teacher_logits.size()) {
        throw InvalidArgument("dkd_loss: student/teacher class counts differ");
    }
    if (!(temp > 0.0)) throw InvalidArgument("dkd_loss: temperature must be > 0");
    if (params.alpha < 0.0) throw InvalidArgument("dkd_loss: alpha must be >= 0");

    const std::size_t classes = student_logits.size();
    const auto y = static_cast<std::size_t>(label);

    // Target pair at temperature 1.
    const auto lp_s = log_softmax(student_logits, 1.0);
    const auto lp_t = log_softmax(teacher_logits, 1.0);
    const double ps_y = std::exp(lp_s[y]);
    const double pt_y = std::exp(lp_t[y]);
    const double bs0 = std::max(ps_y, kProbFloor);
    const double bs1 = std::max(1.0 - ps_y, kProbFloor);
    const double bt0 = pt_y;
    const double bt1 = 1.0 - pt_y;
    double kl_target = 0.0;
    if (bt0 > 0.0) kl_target += bt0 * (std::log(bt0) - std::log(bs0));
    if (bt1 > 0.0) kl_target += bt1 * (std::log(bt1) - std::log(bs1));

    // Non-target distributions at the given temperature, both sides.
    const auto lnt_s = log_softmax_nontarget(student_logits, label, temp);
    const auto lnt_t = log_softmax_nontarget(teacher_logits, label, temp);
    double kl_nt = 0.0;
    for (std::size_t j = 0; j < lnt_t.size(); ++j) {
        const double ptj = std::exp(lnt_t[j]);
        if (ptj > 0.0) kl_nt += ptj * (lnt_t[j] - lnt_s[j]);
    }

    const double loss = params.alpha * (std::max(kl_target, 0.0) + std::max(kl_nt, 0.0));

    if (student_grad) {
        student_grad->assign(classes, 0.0);
        // d(kl_target)/ds_j = (bt1/bs1 - bt0/bs0) * ps_y * (1[j==y] - ps_j)
        const double ratio = bt1 / bs1 - bt0 / bs0;
        for (std::size_t j = 0; j < classes; ++j) {
            const double ps_j = std::exp(lp_s[j]);
            const double indicator = (j == y) ? 1.0 : 0.0;
            (*student_grad)[j] = params.alpha * ratio * ps_y * (indicator - ps_j);
        }
        // d(kl_nt)/ds_j = (ps_nt_j - pt_nt_j) / temp for j != y
        std::size_t sub = 0;
        for (std::size_t j = 0; j < classes; ++j) {
            if (j == y) continue;
            const double psj = std::exp(lnt_s[sub]);
            const double ptj = std::exp(lnt_t[sub]);
            (*student_grad)[j] += params.alpha * (psj - ptj) / temp;
            ++sub;
        }
    }
    return loss;
}

double dkd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                const std::vector<int>& labels, const DkdParams& params, double temp,
                nn::GradTape* tape) {
    if (!student_logits.same_shape(teacher_logits)) {
        throw ShapeError("dkd_loss: student/teacher logit shapes differ");
    }
    if (labels.size() != student_logits.rows()) {
        throw ShapeError("dkd_loss: label count mismatch");
    }
    if (student_logits.rows() == 0) throw InvalidArgument("dkd_loss: empty batch");

    const auto batch = static_cast<double>(student_logits.rows());
    Matrix grad(student_logits.rows(), student_logits.cols());
    std::vector<double> row_grad;
    double total = 0.0;
    for (std::size_t i = 0; i < student_logits.rows(); ++i) {
        total += dkd_loss(student_logits.row_vector(i), teacher_logits.row_vector(i),
                          labels[i], params, temp, tape ? &row_grad : nullptr);
        if (tape) {
            for (std::size_t j = 0; j < grad.cols(); ++j) {
                grad(i, j) = row_grad[j] / batch;
            }
        }
    }
    if (tape) tape->add_output_grad(grad);
    return total / batch;
}

} // namespace fedhead::distill
