#include "cpda/errors.hpp"

#include <sstream>

namespace cpda {

namespace {

std::string out_of_range_message(std::size_t index, double value) {
  std::ostringstream os;
  os << "probability out of range at index " << index << ": " << value;
  return os.str();
}

}  // namespace

OutOfRange::OutOfRange(std::size_t index, double value)
    : Error(out_of_range_message(index, value)), index_(index), value_(value) {}

BatchElementError::BatchElementError(std::size_t index, const std::string& what)
    : BackendError("batch element " + std::to_string(index) + ": " + what), index_(index) {}

}  // namespace cpda
