#pragma once

// Signal temporal logic over uniformly sampled, discrete-time traces:
// formula AST, a text grammar with a canonical printer, and a robustness
// monitor using the (max, min, +inf, -inf) quantitative semantics.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <peglearn/error.hpp>

namespace peglearn::stl
{

inline constexpr double pos_inf = std::numeric_limits<double>::infinity();
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

enum class comparator
{
  gt,
  ge,
  lt,
  le,
};

/// Closed interval [lo, hi] of sample offsets; `hi == std::nullopt` means "to the end of the trace".
struct interval
{
  int lo = 0;
  std::optional<int> hi;

  friend bool operator==( interval const&, interval const& ) = default;
};

class formula;
using formula_ptr = std::shared_ptr<formula const>;

struct true_lit
{
  friend bool operator==( true_lit, true_lit ) { return true; }
};
struct false_lit
{
  friend bool operator==( false_lit, false_lit ) { return true; }
};
struct predicate
{
  std::string signal;
  comparator cmp;
  double threshold;
};
struct negation
{
  formula_ptr child;
};
struct conjunction
{
  formula_ptr lhs, rhs;
};
struct disjunction
{
  formula_ptr lhs, rhs;
};
struct always
{
  interval window;
  formula_ptr child;
};
struct eventually
{
  interval window;
  formula_ptr child;
};
struct until
{
  interval window;
  formula_ptr lhs, rhs;
};

using formula_node = std::variant<true_lit, false_lit, predicate, negation, conjunction, disjunction, always,
                                  eventually, until>;

/* Immutable AST node. Children are shared, so copies are cheap and
 * formulas can be handed to many threads. */
class formula
{
public:
  explicit formula( formula_node node ) : node_( std::move( node ) ) {}

  formula_node const& node() const noexcept { return node_; }

  template<typename T>
  T const* as() const noexcept
  {
    return std::get_if<T>( &node_ );
  }

private:
  formula_node node_;
};

inline void check_interval( interval const& iv )
{
  if ( iv.lo < 0 )
    throw std::invalid_argument( "interval lower bound must be >= 0" );
  if ( iv.hi && *iv.hi < iv.lo )
    throw std::invalid_argument( "malformed interval: lower bound exceeds upper bound" );
}

/* construction helpers */
inline formula_ptr make( formula_node n ) { return std::make_shared<formula const>( std::move( n ) ); }
inline formula_ptr make_true() { return make( true_lit{} ); }
inline formula_ptr make_false() { return make( false_lit{} ); }
inline formula_ptr make_pred( std::string signal, comparator cmp, double threshold )
{
  return make( predicate{ std::move( signal ), cmp, threshold } );
}
inline formula_ptr make_not( formula_ptr f ) { return make( negation{ std::move( f ) } ); }
inline formula_ptr make_and( formula_ptr a, formula_ptr b ) { return make( conjunction{ std::move( a ), std::move( b ) } ); }
inline formula_ptr make_or( formula_ptr a, formula_ptr b ) { return make( disjunction{ std::move( a ), std::move( b ) } ); }
inline formula_ptr make_always( interval iv, formula_ptr f )
{
  check_interval( iv );
  return make( always{ iv, std::move( f ) } );
}
inline formula_ptr make_eventually( interval iv, formula_ptr f )
{
  check_interval( iv );
  return make( eventually{ iv, std::move( f ) } );
}
inline formula_ptr make_until( interval iv, formula_ptr a, formula_ptr b )
{
  check_interval( iv );
  return make( until{ iv, std::move( a ), std::move( b ) } );
}

/* Structural equality (thresholds compared exactly). */
inline bool structurally_equal( formula const& a, formula const& b )
{
  auto eq = []( formula_ptr const& x, formula_ptr const& y ) { return structurally_equal( *x, *y ); };
  if ( a.node().index() != b.node().index() )
    return false;
  return std::visit(
      [&]( auto const& na ) -> bool {
        using T = std::decay_t<decltype( na )>;
        auto const& nb = std::get<T>( b.node() );
        if constexpr ( std::is_same_v<T, true_lit> || std::is_same_v<T, false_lit> )
          return true;
        else if constexpr ( std::is_same_v<T, predicate> )
          return na.signal == nb.signal && na.cmp == nb.cmp && na.threshold == nb.threshold;
        else if constexpr ( std::is_same_v<T, negation> )
          return eq( na.child, nb.child );
        else if constexpr ( std::is_same_v<T, conjunction> || std::is_same_v<T, disjunction> )
          return eq( na.lhs, nb.lhs ) && eq( na.rhs, nb.rhs );
        else if constexpr ( std::is_same_v<T, always> || std::is_same_v<T, eventually> )
          return na.window == nb.window && eq( na.child, nb.child );
        else
          return na.window == nb.window && eq( na.lhs, nb.lhs ) && eq( na.rhs, nb.rhs );
      },
      a.node() );
}

inline std::size_t depth( formula const& f )
{
  return std::visit(
      []( auto const& n ) -> std::size_t {
        using T = std::decay_t<decltype( n )>;
        if constexpr ( std::is_same_v<T, negation> || std::is_same_v<T, always> || std::is_same_v<T, eventually> )
          return 1 + depth( *n.child );
        else if constexpr ( std::is_same_v<T, conjunction> || std::is_same_v<T, disjunction> || std::is_same_v<T, until> )
          return 1 + std::max( depth( *n.lhs ), depth( *n.rhs ) );
        else
          return 1;
      },
      f.node() );
}

/* Signal names referenced anywhere in the formula, sorted, without duplicates. */
inline std::vector<std::string> signals_of( formula const& f )
{
  std::vector<std::string> out;
  auto walk = [&out]( auto&& self, formula const& g ) -> void {
    std::visit(
        [&]( auto const& n ) {
          using T = std::decay_t<decltype( n )>;
          if constexpr ( std::is_same_v<T, predicate> )
            out.push_back( n.signal );
          else if constexpr ( std::is_same_v<T, negation> || std::is_same_v<T, always> || std::is_same_v<T, eventually> )
            self( self, *n.child );
          else if constexpr ( std::is_same_v<T, conjunction> || std::is_same_v<T, disjunction> || std::is_same_v<T, until> )
          {
            self( self, *n.lhs );
            self( self, *n.rhs );
          }
        },
        g.node() );
  };
  walk( walk, f );
  std::sort( out.begin(), out.end() );
  out.erase( std::unique( out.begin(), out.end() ), out.end() );
  return out;
}

/******************************************************************************
 * Traces
 ******************************************************************************/

/* Named real-valued signals sharing one length L >= 1. */
class trace
{
public:
  trace() = default;

  explicit trace( std::map<std::string, std::vector<double>> signals ) : signals_( std::move( signals ) )
  {
    if ( signals_.empty() )
      throw input_error( "empty trace: no signals" );
    length_ = signals_.begin()->second.size();
    for ( auto const& [name, values] : signals_ )
    {
      if ( values.size() != length_ )
        throw input_error( "ragged trace: signal '" + name + "' has " + std::to_string( values.size() ) +
                           " samples, expected " + std::to_string( length_ ) );
    }
    if ( length_ == 0 )
      throw input_error( "empty trace: signals have no samples" );
  }

  std::size_t length() const noexcept { return length_; }
  bool has( std::string const& name ) const { return signals_.count( name ) != 0; }

  std::span<double const> signal( std::string const& name ) const
  {
    auto it = signals_.find( name );
    if ( it == signals_.end() )
      throw eval_error( "signal '" + name + "' not present in trace" );
    return it->second;
  }

  std::map<std::string, std::vector<double>> const& signals() const noexcept { return signals_; }

private:
  std::map<std::string, std::vector<double>> signals_;
  std::size_t length_ = 0;
};

/******************************************************************************
 * Robustness monitor
 ******************************************************************************/

namespace detail
{

/* Samples [first, last] of the window t + iv clipped to [0, L-1]; empty when first > last. */
struct window_bounds
{
  std::ptrdiff_t first;
  std::ptrdiff_t last;
  bool empty() const noexcept { return first > last; }
};

inline window_bounds clip_window( interval const& iv, std::ptrdiff_t t, std::ptrdiff_t length )
{
  std::ptrdiff_t const first = t + iv.lo;
  std::ptrdiff_t const last = iv.hi ? std::min<std::ptrdiff_t>( t + *iv.hi, length - 1 ) : length - 1;
  return { first, last };
}

inline double predicate_margin( comparator cmp, double x, double c )
{
  switch ( cmp )
  {
  case comparator::gt:
  case comparator::ge:
    return x - c;
  case comparator::lt:
  case comparator::le:
    return c - x;
  }
  return 0.0;
}

/* Robustness signal of every subformula over the whole trace, each node computed once. */
inline std::vector<double> robustness_signal( formula const& f, trace const& tr )
{
  auto const length = static_cast<std::ptrdiff_t>( tr.length() );
  std::vector<double> out( tr.length() );

  std::visit(
      [&]( auto const& n ) {
        using T = std::decay_t<decltype( n )>;
        if constexpr ( std::is_same_v<T, true_lit> )
          std::fill( out.begin(), out.end(), pos_inf );
        else if constexpr ( std::is_same_v<T, false_lit> )
          std::fill( out.begin(), out.end(), neg_inf );
        else if constexpr ( std::is_same_v<T, predicate> )
        {
          auto const x = tr.signal( n.signal );
          for ( std::ptrdiff_t t = 0; t < length; ++t )
            out[t] = predicate_margin( n.cmp, x[t], n.threshold );
        }
        else if constexpr ( std::is_same_v<T, negation> )
        {
          out = robustness_signal( *n.child, tr );
          for ( auto& v : out )
            v = -v;
        }
        else if constexpr ( std::is_same_v<T, conjunction> || std::is_same_v<T, disjunction> )
        {
          auto const a = robustness_signal( *n.lhs, tr );
          auto const b = robustness_signal( *n.rhs, tr );
          for ( std::ptrdiff_t t = 0; t < length; ++t )
            out[t] = std::is_same_v<T, conjunction> ? std::min( a[t], b[t] ) : std::max( a[t], b[t] );
        }
        else if constexpr ( std::is_same_v<T, always> || std::is_same_v<T, eventually> )
        {
          constexpr bool is_min = std::is_same_v<T, always>;
          auto const inner = robustness_signal( *n.child, tr );
          for ( std::ptrdiff_t t = 0; t < length; ++t )
          {
            auto const w = clip_window( n.window, t, length );
            double acc = is_min ? pos_inf : neg_inf;
            for ( auto tau = w.first; tau <= w.last; ++tau )
              acc = is_min ? std::min( acc, inner[tau] ) : std::max( acc, inner[tau] );
            out[t] = acc;
          }
        }
        else
        {
          auto const lhs = robustness_signal( *n.lhs, tr );
          auto const rhs = robustness_signal( *n.rhs, tr );
          for ( std::ptrdiff_t t = 0; t < length; ++t )
          {
            auto const w = clip_window( n.window, t, length );
            double best = neg_inf;
            double prefix = pos_inf; /* min of lhs over [t, tau1) */
            for ( auto tau = t; tau <= w.last; ++tau )
            {
              if ( tau >= w.first )
                best = std::max( best, std::min( rhs[tau], prefix ) );
              prefix = std::min( prefix, lhs[tau] );
            }
            out[t] = best;
          }
        }
      },
      f.node() );
  return out;
}

inline interval const* top_window( formula const& f )
{
  if ( auto const* n = f.as<always>() )
    return &n->window;
  if ( auto const* n = f.as<eventually>() )
    return &n->window;
  if ( auto const* n = f.as<until>() )
    return &n->window;
  return nullptr;
}

} // namespace detail

/* Robustness of `f` on `tr` at sample `t`. Negative means violation.
 * Nested temporal windows that fall off the trace are vacuous (G -> +inf,
 * F -> -inf); an empty window on the outermost operator is an error. */
inline double robustness( formula const& f, trace const& tr, std::size_t t = 0 )
{
  if ( t >= tr.length() )
    throw eval_error( "time index " + std::to_string( t ) + " outside trace of length " + std::to_string( tr.length() ) );
  if ( auto const* iv = detail::top_window( f ) )
  {
    auto const w = detail::clip_window( *iv, static_cast<std::ptrdiff_t>( t ), static_cast<std::ptrdiff_t>( tr.length() ) );
    if ( w.empty() )
      throw eval_error( "temporal window at t=" + std::to_string( t ) + " lies outside the trace" );
  }
  return detail::robustness_signal( f, tr )[t];
}

inline bool boolean_sat( formula const& f, trace const& tr, std::size_t t = 0 ) { return robustness( f, tr, t ) >= 0.0; }

inline double normalize_robustness( double value, double scale )
{
  if ( !( scale > 0.0 ) )
    throw std::invalid_argument( "normalization scale must be > 0" );
  return std::tanh( value / scale );
}

/******************************************************************************
 * Printer
 ******************************************************************************/

inline std::string format_number( double v )
{
  char buf[64];
  auto const res = std::to_chars( buf, buf + sizeof( buf ), v );
  return std::string( buf, res.ptr );
}

inline char const* comparator_symbol( comparator c )
{
  switch ( c )
  {
  case comparator::gt:
    return ">";
  case comparator::ge:
    return ">=";
  case comparator::lt:
    return "<";
  case comparator::le:
    return "<=";
  }
  return "?";
}

inline std::string to_string( interval const& iv )
{
  return "[" + std::to_string( iv.lo ) + "," + ( iv.hi ? std::to_string( *iv.hi ) : std::string( "end" ) ) + "]";
}

/* Canonical, fully parenthesized text; parse( to_string( f ) ) is structurally equal to f. */
inline std::string to_string( formula const& f )
{
  return std::visit(
      []( auto const& n ) -> std::string {
        using T = std::decay_t<decltype( n )>;
        if constexpr ( std::is_same_v<T, true_lit> )
          return "true";
        else if constexpr ( std::is_same_v<T, false_lit> )
          return "false";
        else if constexpr ( std::is_same_v<T, predicate> )
          return n.signal + " " + comparator_symbol( n.cmp ) + " " + format_number( n.threshold );
        else if constexpr ( std::is_same_v<T, negation> )
          return "!(" + to_string( *n.child ) + ")";
        else if constexpr ( std::is_same_v<T, conjunction> )
          return "(" + to_string( *n.lhs ) + " & " + to_string( *n.rhs ) + ")";
        else if constexpr ( std::is_same_v<T, disjunction> )
          return "(" + to_string( *n.lhs ) + " | " + to_string( *n.rhs ) + ")";
        else if constexpr ( std::is_same_v<T, always> )
          return "G" + to_string( n.window ) + "(" + to_string( *n.child ) + ")";
        else if constexpr ( std::is_same_v<T, eventually> )
          return "F" + to_string( n.window ) + "(" + to_string( *n.child ) + ")";
        else
          return "((" + to_string( *n.lhs ) + ") U" + to_string( n.window ) + " (" + to_string( *n.rhs ) + "))";
      },
      f.node() );
}

/******************************************************************************
 * Parser
 ******************************************************************************/

/*
 * formula := or
 * or      := and { ("|" | "or") and }
 * and     := until { ("&" | "and") until }
 * until   := unary [ ("U" | "until") interval until ]
 * unary   := ("!" | "not") unary
 *          | ("G" | "alw" | "F" | "ev") interval unary
 *          | "(" formula ")" | "true" | "false" | ident cmp number
 * interval:= "[" int "," ( int | "end" ) "]"
 */
class parser
{
public:
  explicit parser( std::string_view text ) : text_( text ) {}

  formula_ptr parse()
  {
    auto f = parse_or();
    skip_ws();
    if ( pos_ < text_.size() )
      fail( "unexpected input '" + std::string( 1, text_[pos_] ) + "'" );
    return f;
  }

private:
  [[noreturn]] void fail( std::string const& msg ) const { fail_at( pos_, msg ); }

  [[noreturn]] void fail_at( std::size_t at, std::string const& msg ) const
  {
    std::size_t line = 1, column = 1;
    for ( std::size_t i = 0; i < at && i < text_.size(); ++i )
    {
      if ( text_[i] == '\n' )
      {
        ++line;
        column = 1;
      }
      else
        ++column;
    }
    throw parse_error( msg, line, column );
  }

  void skip_ws()
  {
    while ( pos_ < text_.size() && std::isspace( static_cast<unsigned char>( text_[pos_] ) ) )
      ++pos_;
  }

  bool peek_char( char c )
  {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept_char( char c )
  {
    if ( !peek_char( c ) )
      return false;
    ++pos_;
    return true;
  }

  void expect_char( char c )
  {
    if ( !accept_char( c ) )
      fail( std::string( "expected '" ) + c + "'" );
  }

  static bool ident_start( char c ) { return std::isalpha( static_cast<unsigned char>( c ) ) || c == '_'; }
  static bool ident_char( char c ) { return std::isalnum( static_cast<unsigned char>( c ) ) || c == '_' || c == '.'; }

  std::string_view peek_ident()
  {
    skip_ws();
    if ( pos_ >= text_.size() || !ident_start( text_[pos_] ) )
      return {};
    auto end = pos_;
    while ( end < text_.size() && ident_char( text_[end] ) )
      ++end;
    return text_.substr( pos_, end - pos_ );
  }

  /* true when the identifier at the cursor is `word` and is followed by '[' */
  bool at_keyword_with_interval( std::initializer_list<std::string_view> words )
  {
    auto const id = peek_ident();
    if ( id.empty() || std::find( words.begin(), words.end(), id ) == words.end() )
      return false;
    auto p = pos_ + id.size();
    while ( p < text_.size() && std::isspace( static_cast<unsigned char>( text_[p] ) ) )
      ++p;
    return p < text_.size() && text_[p] == '[';
  }

  bool accept_word( std::string_view word )
  {
    if ( peek_ident() != word )
      return false;
    pos_ += word.size();
    return true;
  }

  int parse_int()
  {
    skip_ws();
    int v = 0;
    auto const* first = text_.data() + pos_;
    auto const res = std::from_chars( first, text_.data() + text_.size(), v );
    if ( res.ec != std::errc{} || v < 0 )
      fail( "expected non-negative integer" );
    pos_ += static_cast<std::size_t>( res.ptr - first );
    return v;
  }

  interval parse_interval()
  {
    auto const start = ( skip_ws(), pos_ );
    expect_char( '[' );
    interval iv;
    iv.lo = parse_int();
    expect_char( ',' );
    if ( !accept_word( "end" ) )
      iv.hi = parse_int();
    expect_char( ']' );
    if ( iv.hi && *iv.hi < iv.lo )
      fail_at( start, "malformed interval " + to_string( iv ) + ": lower bound exceeds upper bound" );
    return iv;
  }

  double parse_number()
  {
    skip_ws();
    auto const* first = text_.data() + pos_;
    auto const* last = text_.data() + text_.size();
    if ( first != last && *first == '+' )
      ++first;
    double v = 0.0;
    auto const res = std::from_chars( first, last, v );
    if ( res.ec != std::errc{} )
      fail( "expected number" );
    pos_ = static_cast<std::size_t>( res.ptr - text_.data() );
    return v;
  }

  formula_ptr parse_or()
  {
    auto lhs = parse_and();
    while ( accept_char( '|' ) || accept_word( "or" ) )
      lhs = make_or( lhs, parse_and() );
    return lhs;
  }

  formula_ptr parse_and()
  {
    auto lhs = parse_until();
    while ( accept_char( '&' ) || accept_word( "and" ) )
      lhs = make_and( lhs, parse_until() );
    return lhs;
  }

  formula_ptr parse_until()
  {
    auto lhs = parse_unary();
    if ( at_keyword_with_interval( { "U", "until" } ) )
    {
      pos_ += peek_ident().size();
      auto const iv = parse_interval();
      return make_until( iv, lhs, parse_until() );
    }
    return lhs;
  }

  formula_ptr parse_unary()
  {
    skip_ws();
    if ( pos_ >= text_.size() )
      fail( "unexpected end of formula" );
    if ( accept_char( '!' ) || accept_word( "not" ) )
      return make_not( parse_unary() );
    if ( at_keyword_with_interval( { "G", "alw" } ) )
    {
      pos_ += peek_ident().size();
      auto const iv = parse_interval();
      return make_always( iv, parse_unary() );
    }
    if ( at_keyword_with_interval( { "F", "ev" } ) )
    {
      pos_ += peek_ident().size();
      auto const iv = parse_interval();
      return make_eventually( iv, parse_unary() );
    }
    if ( accept_char( '(' ) )
    {
      auto inner = parse_or();
      expect_char( ')' );
      return inner;
    }
    auto const id = peek_ident();
    if ( id.empty() )
      fail( "unexpected character '" + std::string( 1, text_[pos_] ) + "'" );
    if ( id == "U" || id == "until" || id == "and" || id == "or" )
      fail( "unexpected operator '" + std::string( id ) + "'" );
    if ( accept_word( "true" ) )
      return make_true();
    if ( accept_word( "false" ) )
      return make_false();

    std::string signal( id );
    pos_ += id.size();
    skip_ws();
    comparator cmp;
    if ( accept_char( '>' ) )
      cmp = accept_char( '=' ) ? comparator::ge : comparator::gt;
    else if ( accept_char( '<' ) )
      cmp = accept_char( '=' ) ? comparator::le : comparator::lt;
    else if ( pos_ < text_.size() )
      fail( "unknown operator after '" + signal + "'; expected one of > >= < <=" );
    else
      fail( "unexpected end of formula after '" + signal + "'" );
    return make_pred( std::move( signal ), cmp, parse_number() );
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline formula_ptr parse_formula( std::string_view text ) { return parser( text ).parse(); }

} // namespace peglearn::stl
