#ifndef SEMIDYN_ERROR_HPP_
#define SEMIDYN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace semidyn {

  // Base of every exception thrown by the library.
  class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
  };

  class InvalidArgument : public Error {
   public:
    using Error::Error;
  };

  // An affine map z -> az + b with a == 0 was requested where an invertible
  // one is required.
  class DegenerateAffine : public Error {
   public:
    DegenerateAffine() : Error("affine map has zero linear coefficient") {}
  };

  class ParseError : public Error {
   public:
    ParseError(std::string const& what, std::size_t position)
        : Error(what + " at offset " + std::to_string(position)),
          _position(position) {}

    [[nodiscard]] std::size_t position() const noexcept {
      return _position;
    }

   private:
    std::size_t _position;
  };

}  // namespace semidyn

#endif  // SEMIDYN_ERROR_HPP_
