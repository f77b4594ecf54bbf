#pragma once

#include <string>

namespace duma::backends {

struct Health {
    bool ok = true;
    std::string detail;
};

// String in, string out. Implementations must be reentrant and must not
// block past their configured timeout; failures throw duma::Error.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual std::string generate(const std::string& prompt) = 0;
    virtual std::string name() const = 0;
    virtual Health health() const { return {}; }
};

} // namespace duma::backends
