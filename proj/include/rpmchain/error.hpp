#pragma once

#include <stdexcept>
#include <string>

namespace rpmchain {

// Thrown on precondition violations and invalid inputs. Expected runtime
// outcomes (bad signature, failed decryption, no quorum) are return values,
// not exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rpmchain
