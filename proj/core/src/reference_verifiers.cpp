#include "vqdd/reference_verifiers.hpp"

#include <algorithm>
#include <deque>

#include "vqdd/errors.hpp"

namespace vqdd {

namespace {

struct Bounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

Bounds propagate_fc(const FullyConnectedLayer& fc, const Bounds& in) {
    const Eigen::MatrixXd pos = fc.weights.cwiseMax(0.0);
    const Eigen::MatrixXd neg = fc.weights.cwiseMin(0.0);
    Bounds out;
    out.lo = pos * in.lo + neg * in.hi + fc.biases;
    out.hi = pos * in.hi + neg * in.lo + fc.biases;
    return out;
}

Bounds propagate_conv(const ConvolutionalLayer& conv, const Bounds& in) {
    const int ho = conv.out_height();
    const int wo = conv.out_width();
    Bounds out;
    out.lo.resize(conv.fan_out());
    out.hi.resize(conv.fan_out());
    for (int oc = 0; oc < conv.out_channels; ++oc) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double lo = conv.biases(oc);
                double hi = conv.biases(oc);
                for (int ic = 0; ic < conv.in_channels; ++ic) {
                    for (int ky = 0; ky < conv.kernel_size; ++ky) {
                        const int iy = oy * conv.stride - conv.padding + ky;
                        if (iy < 0 || iy >= conv.height) continue;
                        for (int kx = 0; kx < conv.kernel_size; ++kx) {
                            const int ix = ox * conv.stride - conv.padding + kx;
                            if (ix < 0 || ix >= conv.width) continue;
                            const double w = conv.kernel_at(oc, ic, ky, kx);
                            const int idx = (ic * conv.height + iy) * conv.width + ix;
                            if (w >= 0.0) {
                                lo += w * in.lo(idx);
                                hi += w * in.hi(idx);
                            } else {
                                lo += w * in.hi(idx);
                                hi += w * in.lo(idx);
                            }
                        }
                    }
                }
                const int idx = (oc * ho + oy) * wo + ox;
                out.lo(idx) = lo;
                out.hi(idx) = hi;
            }
        }
    }
    return out;
}

// Interval bound propagation through the whole network.
Bounds output_bounds(const Network& network, const Bounds& input) {
    Bounds current = input;
    for (const Layer& layer : network.layers()) {
        if (const auto* fc = std::get_if<FullyConnectedLayer>(&layer))
            current = propagate_fc(*fc, current);
        else
            current = propagate_conv(std::get<ConvolutionalLayer>(layer), current);
        if (layer_activation(layer) == ActivationKind::ReLU) {
            current.lo = current.lo.cwiseMax(0.0);
            current.hi = current.hi.cwiseMax(0.0);
        }
    }
    return current;
}

// A disjunct is certainly unreachable when some inequality cannot hold
// anywhere in the output box; the region is unreachable when every disjunct
// is.
bool region_unreachable(const Property& property, const Bounds& out) {
    for (const Conjunction& conjunct : property.output_region()) {
        bool disjunct_possible = true;
        for (const LinearInequality& ineq : conjunct) {
            double best = 0.0;  // extreme value of coeffs . y over the box
            for (int i = 0; i < ineq.coeffs.size(); ++i) {
                const double c = ineq.coeffs(i);
                if (ineq.relation == Relation::LessEq)
                    best += c >= 0.0 ? c * out.lo(i) : c * out.hi(i);  // minimize
                else
                    best += c >= 0.0 ? c * out.hi(i) : c * out.lo(i);  // maximize
            }
            const bool possible =
                ineq.relation == Relation::LessEq ? best <= ineq.bound : best >= ineq.bound;
            if (!possible) {
                disjunct_possible = false;
                break;
            }
        }
        if (disjunct_possible) return false;
    }
    return true;
}

VerdictOutcome sat_outcome(Eigen::VectorXd witness, std::string note) {
    VerdictOutcome outcome;
    outcome.verdict = Verdict::Sat;
    outcome.witness = std::move(witness);
    outcome.raw_output = std::move(note);
    return outcome;
}

VerdictOutcome plain_outcome(Verdict verdict, std::string note) {
    VerdictOutcome outcome;
    outcome.verdict = verdict;
    outcome.raw_output = std::move(note);
    return outcome;
}

}  // namespace

VerdictOutcome bnb_verify(const VerificationQuery& query, const BnbOptions& options) {
    const Network& network = query.network();
    const Property& property = query.property();

    Bounds root;
    root.lo.resize(property.input_dim());
    root.hi.resize(property.input_dim());
    for (int i = 0; i < property.input_dim(); ++i) {
        root.lo(i) = property.input_box()[i].lower;
        root.hi(i) = property.input_box()[i].upper;
    }

    std::deque<Bounds> queue;
    queue.push_back(std::move(root));
    std::int64_t splits = 0;
    bool unknown_seen = false;

    while (!queue.empty()) {
        const Bounds box = std::move(queue.front());
        queue.pop_front();

        const Eigen::VectorXd center = (box.lo + box.hi) / 2.0;
        if (validate_witness(query, center, 0.0) == WitnessStatus::Valid)
            return sat_outcome(center, "witness found after " + std::to_string(splits) +
                                           " splits");

        if (region_unreachable(property, output_bounds(network, box))) continue;

        int widest = 0;
        double width = 0.0;
        for (int i = 0; i < box.lo.size(); ++i) {
            const double w = box.hi(i) - box.lo(i);
            if (w > width) {
                width = w;
                widest = i;
            }
        }
        if (width <= options.box_resolution) {
            unknown_seen = true;
            continue;
        }

        if (++splits > options.max_splits)
            return plain_outcome(Verdict::Error,
                                 "unknown: split budget of " +
                                     std::to_string(options.max_splits) + " exhausted");

        Bounds low = box;
        Bounds high = box;
        const double mid = (box.lo(widest) + box.hi(widest)) / 2.0;
        low.hi(widest) = mid;
        high.lo(widest) = mid;
        queue.push_back(std::move(low));
        queue.push_back(std::move(high));
    }

    if (unknown_seen)
        return plain_outcome(Verdict::Error,
                             "unknown: satisfiability undecided at box resolution");
    return plain_outcome(Verdict::Unsat, "all boxes pruned after " + std::to_string(splits) +
                                             " splits");
}

void FaultSpec::validate() const {
    if (mode == FaultMode::LieAboveSize && threshold < 1)
        throw InvalidInputError("LieAboveSize threshold must be >= 1");
}

VerdictOutcome faulty_verify(const FaultSpec& spec, const VerificationQuery& query,
                             const BnbOptions& options) {
    spec.validate();
    VerdictOutcome truth = bnb_verify(query, options);
    if (truth.verdict == Verdict::Error || truth.verdict == Verdict::Timeout) return truth;

    const auto& box = query.property().input_box();
    switch (spec.mode) {
        case FaultMode::FlipToSat: {
            if (truth.verdict != Verdict::Unsat) return truth;
            Eigen::VectorXd midpoint(query.network().input_dim());
            for (int i = 0; i < midpoint.size(); ++i)
                midpoint(i) = (box[i].lower + box[i].upper) / 2.0;
            return sat_outcome(std::move(midpoint), "fabricated witness (flip-to-sat)");
        }
        case FaultMode::FlipToUnsat: {
            if (truth.verdict != Verdict::Sat) return truth;
            return plain_outcome(Verdict::Unsat, "suppressed witness (flip-to-unsat)");
        }
        case FaultMode::CorruptWitness: {
            if (truth.verdict != Verdict::Sat || !truth.witness) return truth;
            Eigen::VectorXd witness = *truth.witness;
            const int coord = static_cast<int>(spec.seed % static_cast<std::uint64_t>(
                                                               witness.size()));
            const double width = box[coord].upper - box[coord].lower;
            witness(coord) = box[coord].upper + std::max(width, 1.0);
            return sat_outcome(std::move(witness), "corrupted witness coordinate " +
                                                       std::to_string(coord));
        }
        case FaultMode::LieAboveSize: {
            if (query.network().size() < spec.threshold) return truth;
            if (truth.verdict != Verdict::Sat) return truth;
            return plain_outcome(Verdict::Unsat,
                                 "suppressed witness (lie-above-size, size " +
                                     std::to_string(query.network().size()) + " >= " +
                                     std::to_string(spec.threshold) + ")");
        }
    }
    return truth;
}

}  // namespace vqdd
