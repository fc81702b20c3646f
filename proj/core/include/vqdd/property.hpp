#pragma once

#include <Eigen/Dense>
#include <vector>

namespace vqdd {

enum class Relation { LessEq, GreaterEq };

/// One linear constraint over the output variables: coeffs . y <= bound
/// or coeffs . y >= bound.
struct LinearInequality {
    Eigen::VectorXd coeffs;
    Relation relation = Relation::LessEq;
    double bound = 0.0;

    bool satisfied(const Eigen::VectorXd& output, double tol) const;
};

/// Conjunction of linear inequalities.
using Conjunction = std::vector<LinearInequality>;

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Input box plus output region. The output region is a disjunction of
/// conjunctions; an empty disjunction is unsatisfiable, a disjunct with no
/// inequalities accepts every output.
class Property {
public:
    Property(std::vector<Interval> input_box, int output_dim,
             std::vector<Conjunction> output_region);

    int input_dim() const { return static_cast<int>(input_box_.size()); }
    int output_dim() const { return output_dim_; }
    const std::vector<Interval>& input_box() const { return input_box_; }
    const std::vector<Conjunction>& output_region() const { return output_region_; }

    /// True iff every coordinate lies in its closed interval, widened
    /// outward by `tol`.
    bool contains_input(const Eigen::VectorXd& point, double tol = 0.0) const;

    /// True iff some disjunct holds with slack `tol` on every inequality.
    bool satisfies_output(const Eigen::VectorXd& output, double tol) const;

private:
    std::vector<Interval> input_box_;
    int output_dim_;
    std::vector<Conjunction> output_region_;
};

}  // namespace vqdd
