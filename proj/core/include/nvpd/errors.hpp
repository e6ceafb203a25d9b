#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nvpd {

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> diags)
        : std::runtime_error(join(diags)), diagnostics_(std::move(diags)) {}
    explicit ValidationError(const std::string& msg) : ValidationError(std::vector<std::string>{msg}) {}
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& d) {
        std::string s;
        for (const auto& x : d) {
            if (!s.empty()) s += "; ";
            s += x;
        }
        return s;
    }
    std::vector<std::string> diagnostics_;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nvpd
