#pragma once

#include <string>
#include <string_view>

namespace smcgen {

enum class SchemeKind { multinomial, stratified, systematic };

// A resampling mechanism. `shuffle` draws a uniform permutation of the
// children before strata are assigned; it has no effect for multinomial.
struct Scheme {
  SchemeKind kind = SchemeKind::multinomial;
  bool shuffle = false;

  static Scheme multinomial() { return {SchemeKind::multinomial, false}; }
  static Scheme stratified(bool shuffle = true) { return {SchemeKind::stratified, shuffle}; }
  static Scheme systematic(bool shuffle = false) { return {SchemeKind::systematic, shuffle}; }

  bool operator==(const Scheme&) const = default;
};

// Accepted names: multinomial, stratified (shuffled), stratified-ordered,
// systematic (ordered), systematic-shuffled. Throws InvalidArgument otherwise.
Scheme parse_scheme(std::string_view name);
std::string to_string(const Scheme& scheme);

}  // namespace smcgen
