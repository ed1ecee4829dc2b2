#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace peglearn
{

/* Bad user input: malformed files, ragged traces, inconsistent dimensions. */
class input_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/* Formula text that does not match the grammar. */
class parse_error : public input_error
{
public:
  parse_error( std::string const& msg, std::size_t line, std::size_t column )
      : input_error( "parse error at " + std::to_string( line ) + ":" + std::to_string( column ) + ": " + msg ),
        line_( line ), column_( column )
  {
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

/* Monitor failure: missing signal, time index or window outside the trace. */
class eval_error : public input_error
{
public:
  using input_error::input_error;
};

/* A structural guarantee did not hold (e.g. a cycle survived reduction). */
class invariant_error : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

} // namespace peglearn
