#include "vqdd/query.hpp"

#include <string>
#include <utility>

#include "vqdd/errors.hpp"

namespace vqdd {

VerificationQuery::VerificationQuery(Network network, Property property)
    : network_(std::move(network)), property_(std::move(property)) {
    if (property_.input_dim() != network_.input_dim())
        throw InvalidModelError("property input arity " + std::to_string(property_.input_dim()) +
                                " does not match network input dimension " +
                                std::to_string(network_.input_dim()));
    if (property_.output_dim() != network_.output_dim())
        throw InvalidModelError("property output arity " + std::to_string(property_.output_dim()) +
                                " does not match network output dimension " +
                                std::to_string(network_.output_dim()));
}

VerificationQuery VerificationQuery::with_network(Network network) const {
    return VerificationQuery(std::move(network), property_);
}

}  // namespace vqdd
