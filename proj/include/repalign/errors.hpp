#pragma once

#include <stdexcept>
#include <string>

namespace repalign {

// Dimension/shape misuse (mismatched operands, invalid k, ...).
class dim_error : public std::runtime_error {
public:
    explicit dim_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain errors on values (zero-norm row, non-positive scale, bad index).
class value_error : public std::runtime_error {
public:
    explicit value_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative procedure failed to converge (SVD sweep cap, diverged training).
class convergence_error : public std::runtime_error {
public:
    explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// File / stream problems that are not format violations.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Base for matrix-load format violations; subclasses are distinct so tests
// and callers can react to the exact failure class.
class load_error : public io_error {
public:
    explicit load_error(const std::string& msg) : io_error(msg) {}
};

class bad_magic_error : public load_error {
public:
    explicit bad_magic_error(const std::string& msg) : load_error(msg) {}
};

class version_error : public load_error {
public:
    explicit version_error(const std::string& msg) : load_error(msg) {}
};

class truncated_error : public load_error {
public:
    explicit truncated_error(const std::string& msg) : load_error(msg) {}
};

class non_finite_error : public load_error {
public:
    explicit non_finite_error(const std::string& msg) : load_error(msg) {}
};

}  // namespace repalign
