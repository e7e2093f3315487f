#pragma once

#include <stdexcept>
#include <string>

namespace triattn {

// Broad failure categories, mapped onto CLI exit codes by the frontend.
enum class errc {
    usage,     // bad arguments / configuration      -> exit 1
    data,      // malformed or inconsistent input    -> exit 2
    internal,  // invariant violation                -> exit 3
};

class error : public std::runtime_error {
  public:
    error(errc code, const std::string & what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

struct invalid_dimension_error : error {
    explicit invalid_dimension_error(const std::string & w) : error(errc::usage, w) {}
};
struct invalid_base_error : error {
    explicit invalid_base_error(const std::string & w) : error(errc::usage, w) {}
};
struct invalid_argument_error : error {
    explicit invalid_argument_error(const std::string & w) : error(errc::usage, w) {}
};
struct causality_error : error {
    explicit causality_error(const std::string & w) : error(errc::usage, w) {}
};
struct format_error : error {
    explicit format_error(const std::string & w) : error(errc::data, w) {}
};
struct length_error : error {
    explicit length_error(const std::string & w) : error(errc::data, w) {}
};
struct empty_input_error : error {
    explicit empty_input_error(const std::string & w) : error(errc::data, w) {}
};
struct ordering_error : error {
    explicit ordering_error(const std::string & w) : error(errc::data, w) {}
};
struct shape_error : error {
    explicit shape_error(const std::string & w) : error(errc::data, w) {}
};
struct configuration_error : error {
    explicit configuration_error(const std::string & w) : error(errc::usage, w) {}
};
struct generation_error : error {
    explicit generation_error(const std::string & w) : error(errc::usage, w) {}
};
struct size_limit_error : error {
    explicit size_limit_error(const std::string & w) : error(errc::usage, w) {}
};
struct insufficient_data_error : error {
    explicit insufficient_data_error(const std::string & w) : error(errc::data, w) {}
};

} // namespace triattn
