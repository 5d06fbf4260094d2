#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace artai {

// Serial is the reference path; parallel must reproduce it bit for bit.
// serial_reverse walks entities backwards and exists to test order independence.
enum class Execution { serial, serial_reverse, parallel };

// Collects at most one exception per slot inside an OpenMP region and
// rethrows the lowest-index one afterwards, so errors match the serial path.
class ErrorSlots {
public:
    explicit ErrorSlots(std::size_t n) : slots_(n) {}
    void capture(std::size_t i) { slots_[i] = std::current_exception(); }
    void rethrow_first() const {
        for (const auto& e : slots_)
            if (e) std::rethrow_exception(e);
    }

private:
    std::vector<std::exception_ptr> slots_;
};

}  // namespace artai
