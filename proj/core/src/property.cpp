#include "vqdd/property.hpp"

#include <string>

#include "vqdd/errors.hpp"

namespace vqdd {

bool LinearInequality::satisfied(const Eigen::VectorXd& output, double tol) const {
    const double value = coeffs.dot(output);
    return relation == Relation::LessEq ? value <= bound + tol : value >= bound - tol;
}

Property::Property(std::vector<Interval> input_box, int output_dim,
                   std::vector<Conjunction> output_region)
    : input_box_(std::move(input_box)),
      output_dim_(output_dim),
      output_region_(std::move(output_region)) {
    if (input_box_.empty()) throw InvalidModelError("property needs at least one input");
    if (output_dim_ < 1) throw InvalidModelError("property output dimension must be positive");
    for (std::size_t i = 0; i < input_box_.size(); ++i) {
        if (!(input_box_[i].lower <= input_box_[i].upper))
            throw InvalidModelError("input " + std::to_string(i) +
                                    " has lower bound above upper bound");
    }
    for (const Conjunction& conjunct : output_region_) {
        for (const LinearInequality& ineq : conjunct) {
            if (ineq.coeffs.size() != output_dim_)
                throw InvalidModelError("output inequality arity " +
                                        std::to_string(ineq.coeffs.size()) +
                                        " does not match output dimension " +
                                        std::to_string(output_dim_));
        }
    }
}

bool Property::contains_input(const Eigen::VectorXd& point, double tol) const {
    if (point.size() != input_dim())
        throw InvalidInputError("point has dimension " + std::to_string(point.size()) +
                                ", property expects " + std::to_string(input_dim()));
    for (int i = 0; i < input_dim(); ++i) {
        if (point(i) < input_box_[i].lower - tol || point(i) > input_box_[i].upper + tol)
            return false;
    }
    return true;
}

bool Property::satisfies_output(const Eigen::VectorXd& output, double tol) const {
    if (output.size() != output_dim_)
        throw InvalidInputError("output has dimension " + std::to_string(output.size()) +
                                ", property expects " + std::to_string(output_dim_));
    for (const Conjunction& conjunct : output_region_) {
        bool all = true;
        for (const LinearInequality& ineq : conjunct) {
            if (!ineq.satisfied(output, tol)) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

}  // namespace vqdd
