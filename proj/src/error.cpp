#include "autm/error.hpp"

#include <sstream>

namespace autm {

DivergenceError::DivergenceError(double value, double time)
    : NumericalError("trajectory diverged"), value_(value), time_(time) {
  rebuild_message();
}

void DivergenceError::set_layer(int layer) {
  layer_ = layer;
  rebuild_message();
}

void DivergenceError::set_coordinate(int coordinate) {
  coordinate_ = coordinate;
  rebuild_message();
}

void DivergenceError::rebuild_message() {
  std::ostringstream os;
  os << "trajectory left the guard box (v=" << value_ << " at t=" << time_ << ")";
  if (layer_) os << " in layer " << *layer_;
  if (coordinate_) os << ", coordinate " << *coordinate_;
  message_ = os.str();
}

namespace {

std::string batch_message(const std::vector<std::size_t>& indices, const std::string& reason) {
  std::ostringstream os;
  os << indices.size() << " batch element(s) failed [";
  for (std::size_t i = 0; i < indices.size() && i < 8; ++i) os << (i ? ", " : "") << indices[i];
  if (indices.size() > 8) os << ", ...";
  os << "]: " << reason;
  return os.str();
}

}  // namespace

BatchError::BatchError(std::vector<std::size_t> indices, const std::string& first_reason)
    : NumericalError(batch_message(indices, first_reason)), indices_(std::move(indices)) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

}  // namespace autm
