#pragma once

// Demonstrations, specification sets and the rating matrix Z (one row per
// demonstration, one column per specification), plus file ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include <peglearn/error.hpp>
#include <peglearn/stl.hpp>

namespace peglearn
{

struct demonstration
{
  std::string id;
  stl::trace trace;
  std::map<std::string, std::string> metadata;
};

/* A named specification. A null formula marks an externally rated criterion
 * (e.g. a Likert question) that has no monitor. */
struct specification
{
  std::string name;
  stl::formula_ptr formula;
  std::optional<double> scale; /* per-spec tanh scale, overrides the global one */
};

class spec_set
{
public:
  spec_set() = default;

  explicit spec_set( std::vector<specification> specs ) : specs_( std::move( specs ) )
  {
    if ( specs_.empty() )
      throw input_error( "specification set is empty" );
    std::set<std::string> seen;
    for ( auto const& s : specs_ )
    {
      if ( s.name.empty() )
        throw input_error( "specification with empty name" );
      if ( !seen.insert( s.name ).second )
        throw input_error( "duplicate specification name '" + s.name + "'" );
    }
  }

  std::size_t size() const noexcept { return specs_.size(); }
  specification const& operator[]( std::size_t j ) const { return specs_.at( j ); }
  auto begin() const noexcept { return specs_.begin(); }
  auto end() const noexcept { return specs_.end(); }

  std::vector<std::string> names() const
  {
    std::vector<std::string> out;
    for ( auto const& s : specs_ )
      out.push_back( s.name );
    return out;
  }

private:
  std::vector<specification> specs_;
};

/* Spec file: one `name: formula` per line; blank lines and `#` comments ignored. */
inline spec_set parse_spec_text( std::string_view text )
{
  std::vector<specification> specs;
  std::istringstream in{ std::string( text ) };
  std::string line;
  std::size_t lineno = 0;
  while ( std::getline( in, line ) )
  {
    ++lineno;
    auto const first = line.find_first_not_of( " \t\r" );
    if ( first == std::string::npos || line[first] == '#' )
      continue;
    auto const colon = line.find( ':' );
    if ( colon == std::string::npos )
      throw input_error( "spec line " + std::to_string( lineno ) + ": expected 'name: formula'" );
    auto name = line.substr( first, colon - first );
    name.erase( name.find_last_not_of( " \t" ) + 1 );
    try
    {
      specs.push_back( { name, stl::parse_formula( line.substr( colon + 1 ) ), std::nullopt } );
    }
    catch ( parse_error const& e )
    {
      throw input_error( "spec line " + std::to_string( lineno ) + " ('" + name + "'): " + e.what() );
    }
  }
  return spec_set( std::move( specs ) );
}

/******************************************************************************
 * Rating matrix
 ******************************************************************************/

class rating_matrix
{
public:
  rating_matrix() = default;

  rating_matrix( std::vector<std::string> demo_ids, std::vector<std::string> spec_names, std::vector<double> values )
      : demo_ids_( std::move( demo_ids ) ), spec_names_( std::move( spec_names ) ), values_( std::move( values ) )
  {
    if ( demo_ids_.empty() )
      throw input_error( "rating matrix needs at least one demonstration" );
    if ( spec_names_.empty() )
      throw input_error( "rating matrix needs at least one specification" );
    if ( values_.size() != demo_ids_.size() * spec_names_.size() )
      throw input_error( "rating matrix values do not match its m x n shape" );
    for ( auto v : values_ )
      if ( std::isnan( v ) )
        throw input_error( "rating matrix contains NaN" );
  }

  std::size_t rows() const noexcept { return demo_ids_.size(); }
  std::size_t cols() const noexcept { return spec_names_.size(); }

  double operator()( std::size_t i, std::size_t j ) const { return values_[i * cols() + j]; }
  std::span<double const> row( std::size_t i ) const { return { values_.data() + i * cols(), cols() }; }
  std::vector<double> const& values() const noexcept { return values_; }

  std::vector<std::string> const& demo_ids() const noexcept { return demo_ids_; }
  std::vector<std::string> const& spec_names() const noexcept { return spec_names_; }

  /* declared Likert bounds (`#scale,min,max`), if any */
  std::optional<std::pair<double, double>> scale_bounds;
  /* tanh scale applied per column when the matrix was built from traces */
  std::vector<double> normalization_scales;

private:
  std::vector<std::string> demo_ids_;
  std::vector<std::string> spec_names_;
  std::vector<double> values_;
};

/* Z[i][j] = robustness of spec j on demo i at t = 0, optionally tanh-normalized
 * per column. A spec's own scale wins over `scale`. */
inline rating_matrix build_rating_matrix( std::span<demonstration const> demos, spec_set const& specs,
                                          std::optional<double> scale = std::nullopt )
{
  if ( demos.empty() )
    throw input_error( "cannot build a rating matrix from zero demonstrations" );

  std::vector<double> scales;
  for ( auto const& s : specs )
  {
    auto const sc = s.scale ? s.scale : scale;
    if ( sc && !( *sc > 0.0 ) )
      throw std::invalid_argument( "normalization scale for '" + s.name + "' must be > 0" );
    if ( sc )
      scales.push_back( *sc );
  }
  bool const normalized = !scales.empty();
  if ( normalized && scales.size() != specs.size() )
    throw input_error( "either every specification or none must carry a normalization scale" );

  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve( demos.size() * specs.size() );
  for ( auto const& d : demos )
  {
    ids.push_back( d.id );
    for ( std::size_t j = 0; j < specs.size(); ++j )
    {
      auto const& s = specs[j];
      if ( !s.formula )
        throw input_error( "specification '" + s.name + "' has no formula; supply its ratings via CSV" );
      double rho = 0.0;
      try
      {
        rho = stl::robustness( *s.formula, d.trace, 0 );
      }
      catch ( eval_error const& e )
      {
        throw eval_error( "demo '" + d.id + "', spec '" + s.name + "': " + e.what() );
      }
      values.push_back( normalized ? stl::normalize_robustness( rho, scales[j] ) : rho );
    }
  }
  rating_matrix z( std::move( ids ), specs.names(), std::move( values ) );
  z.normalization_scales = std::move( scales );
  return z;
}

/* Affine map of a Likert matrix from its declared [min, max] onto [-1, 1]. */
inline rating_matrix rescale_to_unit( rating_matrix const& z )
{
  if ( !z.scale_bounds )
    return z;
  auto const [lo, hi] = *z.scale_bounds;
  std::vector<double> values;
  values.reserve( z.values().size() );
  for ( auto v : z.values() )
    values.push_back( 2.0 * ( v - lo ) / ( hi - lo ) - 1.0 );
  rating_matrix out( z.demo_ids(), z.spec_names(), std::move( values ) );
  out.normalization_scales = z.normalization_scales;
  return out;
}

enum class partial_order_relation
{
  leq,
  geq,
  equal,
  incomparable,
};

inline char const* to_string( partial_order_relation r )
{
  switch ( r )
  {
  case partial_order_relation::leq:
    return "LEQ";
  case partial_order_relation::geq:
    return "GEQ";
  case partial_order_relation::equal:
    return "EQUAL";
  case partial_order_relation::incomparable:
    return "INCOMPARABLE";
  }
  return "?";
}

/* Elementwise dominance between two rating rows. */
inline partial_order_relation demo_partial_order( std::span<double const> a, std::span<double const> b )
{
  if ( a.size() != b.size() )
    throw std::invalid_argument( "demo_partial_order: rating vectors differ in length" );
  bool le = true, ge = true;
  for ( std::size_t i = 0; i < a.size(); ++i )
  {
    le = le && a[i] <= b[i];
    ge = ge && a[i] >= b[i];
  }
  if ( le && ge )
    return partial_order_relation::equal;
  if ( le )
    return partial_order_relation::leq;
  if ( ge )
    return partial_order_relation::geq;
  return partial_order_relation::incomparable;
}

/******************************************************************************
 * File formats
 ******************************************************************************/

namespace io
{

inline std::string read_file( std::filesystem::path const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw input_error( "cannot open '" + path.string() + "'" );
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file( std::filesystem::path const& path, std::string const& content )
{
  if ( path.has_parent_path() )
    std::filesystem::create_directories( path.parent_path() );
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw input_error( "cannot write '" + path.string() + "'" );
  out << content;
}

/* Shortest text that parses back to the same double. */
inline std::string format_double( double v )
{
  if ( std::isinf( v ) )
    return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto const res = std::to_chars( buf, buf + sizeof( buf ), v );
  return std::string( buf, res.ptr );
}

inline std::optional<double> parse_double( std::string_view s )
{
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.front() ) ) )
    s.remove_prefix( 1 );
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.back() ) ) )
    s.remove_suffix( 1 );
  if ( !s.empty() && s.front() == '+' )
    s.remove_prefix( 1 );
  double v = 0.0;
  auto const res = std::from_chars( s.data(), s.data() + s.size(), v );
  if ( s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || std::isnan( v ) )
    return std::nullopt;
  return v;
}

inline std::vector<std::string> split_csv_line( std::string const& line )
{
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in( line );
  while ( std::getline( in, cell, ',' ) )
  {
    auto const b = cell.find_first_not_of( " \t\r" );
    auto const e = cell.find_last_not_of( " \t\r" );
    cells.push_back( b == std::string::npos ? std::string() : cell.substr( b, e - b + 1 ) );
  }
  if ( !line.empty() && line.back() == ',' )
    cells.emplace_back();
  return cells;
}

} // namespace io

inline demonstration parse_trajectory_json( std::string const& text, std::string default_id )
{
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse( text );
  }
  catch ( nlohmann::json::parse_error const& e )
  {
    throw input_error( std::string( "trajectory is not valid JSON: " ) + e.what() );
  }
  if ( !doc.is_object() || !doc.contains( "signals" ) || !doc["signals"].is_object() )
    throw input_error( "trajectory must be an object with a \"signals\" object" );

  std::map<std::string, std::vector<double>> signals;
  for ( auto const& [name, samples] : doc["signals"].items() )
  {
    if ( !samples.is_array() )
      throw input_error( "signal '" + name + "' is not an array" );
    auto& out = signals[name];
    for ( std::size_t k = 0; k < samples.size(); ++k )
    {
      if ( !samples[k].is_number() )
        throw input_error( "signal '" + name + "' sample " + std::to_string( k ) + " is not numeric" );
      out.push_back( samples[k].get<double>() );
    }
  }

  demonstration d;
  d.id = doc.contains( "id" ) && doc["id"].is_string() ? doc["id"].get<std::string>() : std::move( default_id );
  d.trace = stl::trace( std::move( signals ) );
  if ( doc.contains( "metadata" ) && doc["metadata"].is_object() )
    for ( auto const& [k, v] : doc["metadata"].items() )
      d.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return d;
}

inline demonstration load_trajectory( std::filesystem::path const& path )
{
  try
  {
    return parse_trajectory_json( io::read_file( path ), path.stem().string() );
  }
  catch ( input_error const& e )
  {
    throw input_error( path.string() + ": " + e.what() );
  }
}

inline nlohmann::ordered_json trajectory_to_json( demonstration const& d )
{
  nlohmann::ordered_json doc;
  doc["id"] = d.id;
  if ( !d.metadata.empty() )
    doc["metadata"] = d.metadata;
  auto& sig = doc["signals"] = nlohmann::ordered_json::object();
  for ( auto const& [name, values] : d.trace.signals() )
    sig[name] = values;
  return doc;
}

/* Rating CSV: header `demo_id,<spec1>,...`, optional `#scale,<min>,<max>`
 * directive, any other `#` line is a comment. */
inline rating_matrix parse_rating_csv( std::string const& text )
{
  std::istringstream in( text );
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::optional<std::pair<double, double>> bounds;
  std::vector<std::string> ids;
  std::set<std::string> seen_ids;
  std::vector<double> values;

  while ( std::getline( in, line ) )
  {
    ++lineno;
    if ( !line.empty() && line.back() == '\r' )
      line.pop_back();
    if ( line.find_first_not_of( " \t" ) == std::string::npos )
      continue;
    if ( line.rfind( "#scale", 0 ) == 0 )
    {
      auto const cells = io::split_csv_line( line );
      std::optional<double> lo, hi;
      if ( cells.size() == 3 )
      {
        lo = io::parse_double( cells[1] );
        hi = io::parse_double( cells[2] );
      }
      if ( !lo || !hi || !( *lo < *hi ) )
        throw input_error( "line " + std::to_string( lineno ) + ": expected '#scale,<min>,<max>' with min < max" );
      bounds = { *lo, *hi };
      continue;
    }
    if ( line.front() == '#' )
      continue;

    auto cells = io::split_csv_line( line );
    if ( header.empty() )
    {
      if ( cells.size() < 2 )
        throw input_error( "line " + std::to_string( lineno ) + ": header needs demo_id and at least one spec" );
      header = std::move( cells );
      continue;
    }
    if ( cells.size() != header.size() )
      throw input_error( "line " + std::to_string( lineno ) + ": row has " + std::to_string( cells.size() ) +
                         " cells, header has " + std::to_string( header.size() ) );
    if ( !seen_ids.insert( cells[0] ).second )
      throw input_error( "line " + std::to_string( lineno ) + ": duplicate demo id '" + cells[0] + "'" );
    ids.push_back( cells[0] );
    for ( std::size_t j = 1; j < cells.size(); ++j )
    {
      auto const v = io::parse_double( cells[j] );
      if ( !v )
        throw input_error( "line " + std::to_string( lineno ) + ", column " + std::to_string( j + 1 ) + " ('" +
                           header[j] + "'): non-numeric cell '" + cells[j] + "'" );
      if ( bounds && ( *v < bounds->first || *v > bounds->second ) )
        throw input_error( "line " + std::to_string( lineno ) + ", column " + std::to_string( j + 1 ) +
                           ": value outside declared scale" );
      values.push_back( *v );
    }
  }
  if ( header.empty() )
    throw input_error( "rating CSV has no header" );

  rating_matrix z( std::move( ids ), std::vector<std::string>( header.begin() + 1, header.end() ), std::move( values ) );
  z.scale_bounds = bounds;
  return z;
}

inline rating_matrix load_rating_matrix_csv( std::filesystem::path const& path )
{
  try
  {
    return parse_rating_csv( io::read_file( path ) );
  }
  catch ( input_error const& e )
  {
    throw input_error( path.string() + ": " + e.what() );
  }
}

/* `comment_lines` are emitted first, each prefixed with "# ". */
inline std::string format_rating_csv( rating_matrix const& z, std::vector<std::string> const& comment_lines = {} )
{
  std::string out;
  for ( auto const& c : comment_lines )
    out += "# " + c + "\n";
  if ( z.scale_bounds )
    out += "#scale," + io::format_double( z.scale_bounds->first ) + "," + io::format_double( z.scale_bounds->second ) + "\n";
  out += "demo_id";
  for ( auto const& s : z.spec_names() )
    out += "," + s;
  out += "\n";
  for ( std::size_t i = 0; i < z.rows(); ++i )
  {
    out += z.demo_ids()[i];
    for ( auto v : z.row( i ) )
      out += "," + io::format_double( v );
    out += "\n";
  }
  return out;
}

} // namespace peglearn
