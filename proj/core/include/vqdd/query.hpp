#pragma once

#include "vqdd/network.hpp"
#include "vqdd/property.hpp"

namespace vqdd {

/// The unit of work: a network together with the property to check on it.
/// Arities are validated on construction.
class VerificationQuery {
public:
    VerificationQuery(Network network, Property property);

    const Network& network() const { return network_; }
    const Property& property() const { return property_; }

    /// Derived query with the same property but a different network.
    VerificationQuery with_network(Network network) const;

private:
    Network network_;
    Property property_;
};

}  // namespace vqdd
