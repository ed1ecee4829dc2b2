#pragma once

// Closed-form search-space sizes for specification orderings and digraphs,
// checked against brute-force enumeration.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace peglearn::combinatorics
{

using big_int = boost::multiprecision::cpp_int;

struct count_report
{
  int n = 0;
  big_int formula_value;
  std::optional<big_int> enumerated_value;

  bool agree() const { return enumerated_value && *enumerated_value == formula_value; }
};

inline big_int factorial( int n )
{
  big_int f = 1;
  for ( int k = 2; k <= n; ++k )
    f *= k;
  return f;
}

inline big_int power( big_int base, std::uint64_t exp )
{
  big_int r = 1;
  while ( exp )
  {
    if ( exp & 1u )
      r *= base;
    base *= base;
    exp >>= 1u;
  }
  return r;
}

/* n! * (ops^(n-1) - 1) + 1 */
inline big_int ordering_count_formula( int n, int ops = 2 )
{
  if ( n < 1 || ops < 1 )
    throw std::invalid_argument( "ordering_count_formula: need n >= 1 and ops >= 1" );
  return factorial( n ) * ( power( ops, static_cast<std::uint64_t>( n - 1 ) ) - 1 ) + 1;
}

/* 3^(n(n-1)/2) - 2^(n+1) + n^2 + n + 2 */
inline big_int digraph_count_formula( int n )
{
  if ( n < 1 )
    throw std::invalid_argument( "digraph_count_formula: need n >= 1" );
  auto const pairs = static_cast<std::uint64_t>( n ) * static_cast<std::uint64_t>( n - 1 ) / 2;
  return power( 3, pairs ) - power( 2, static_cast<std::uint64_t>( n + 1 ) ) + big_int( n ) * n + n + 2;
}

namespace detail
{

/* Calls `f( perm, ops )` for every permutation of 0..n-1 and every string of
 * n-1 operators, where ops[k] is true for '=' and false for '>'. */
template<typename F>
void for_each_chain( int n, F&& f )
{
  std::vector<int> perm( n );
  std::iota( perm.begin(), perm.end(), 0 );
  std::vector<bool> ops( n > 0 ? n - 1 : 0 );
  do
  {
    for ( std::uint64_t mask = 0; mask < ( std::uint64_t{ 1 } << ( n - 1 ) ); ++mask )
    {
      for ( int k = 0; k + 1 < n; ++k )
        ops[k] = ( mask >> k ) & 1u;
      f( perm, ops );
    }
  } while ( std::next_permutation( perm.begin(), perm.end() ) );
}

inline void check_enumeration_range( int n, int max_n, char const* what )
{
  if ( n < 1 || n > max_n )
    throw std::out_of_range( std::string( what ) + ": n must be in [1, " + std::to_string( max_n ) + "]" );
}

} // namespace detail

inline constexpr int max_ordering_enumeration_n = 7;
inline constexpr int max_dag_enumeration_n = 5;

/* Orderings as chains `s1 op s2 op ... sn` with op in {>, =}. Two chains are
 * the same ordering when they are identical, or when both consist only of
 * '=' (every permutation of a = b = ... = z names the same ordering). */
inline big_int ordering_count_enumerate( int n )
{
  detail::check_enumeration_range( n, max_ordering_enumeration_n, "ordering_count_enumerate" );
  std::set<std::pair<std::vector<int>, std::vector<bool>>> seen;
  detail::for_each_chain( n, [&]( std::vector<int> const& perm, std::vector<bool> const& ops ) {
    bool const all_equal = std::all_of( ops.begin(), ops.end(), []( bool b ) { return b; } );
    if ( all_equal )
    {
      std::vector<int> sorted = perm;
      std::sort( sorted.begin(), sorted.end() );
      seen.emplace( sorted, ops );
    }
    else
      seen.emplace( perm, ops );
  } );
  return big_int( seen.size() );
}

/* Distinct weak orders (ordered set partitions): chains are identified
 * whenever they differ only by reordering inside an '=' block. */
inline big_int weak_order_count_enumerate( int n )
{
  detail::check_enumeration_range( n, max_ordering_enumeration_n, "weak_order_count_enumerate" );
  std::set<std::vector<std::vector<int>>> seen;
  detail::for_each_chain( n, [&]( std::vector<int> const& perm, std::vector<bool> const& ops ) {
    std::vector<std::vector<int>> blocks{ { perm[0] } };
    for ( int k = 1; k < n; ++k )
    {
      if ( !ops[k - 1] )
        blocks.emplace_back();
      blocks.back().push_back( perm[k] );
    }
    for ( auto& b : blocks )
      std::sort( b.begin(), b.end() );
    seen.insert( std::move( blocks ) );
  } );
  return big_int( seen.size() );
}

/* Acyclicity by repeatedly peeling sources; adjacency as per-node bitmasks. */
inline bool acyclic_by_topological_sort( std::vector<std::uint32_t> const& out_edges )
{
  auto const n = out_edges.size();
  std::vector<int> indegree( n, 0 );
  for ( std::size_t u = 0; u < n; ++u )
    for ( std::size_t v = 0; v < n; ++v )
      indegree[v] += ( out_edges[u] >> v ) & 1u;
  std::vector<std::size_t> ready;
  for ( std::size_t v = 0; v < n; ++v )
    if ( indegree[v] == 0 )
      ready.push_back( v );
  std::size_t emitted = 0;
  while ( !ready.empty() )
  {
    auto const u = ready.back();
    ready.pop_back();
    ++emitted;
    for ( std::size_t v = 0; v < n; ++v )
      if ( ( ( out_edges[u] >> v ) & 1u ) && --indegree[v] == 0 )
        ready.push_back( v );
  }
  return emitted == n;
}

/* Every assignment of {none, i->j, j->i} to each unordered pair, counting the acyclic ones. */
inline big_int dag_count_enumerate( int n )
{
  detail::check_enumeration_range( n, max_dag_enumeration_n, "dag_count_enumerate" );
  std::vector<std::pair<int, int>> pairs;
  for ( int i = 0; i < n; ++i )
    for ( int j = i + 1; j < n; ++j )
      pairs.emplace_back( i, j );

  std::uint64_t total = 1;
  for ( std::size_t k = 0; k < pairs.size(); ++k )
    total *= 3;

  std::uint64_t acyclic = 0;
  std::vector<std::uint32_t> out( n );
  for ( std::uint64_t code = 0; code < total; ++code )
  {
    std::fill( out.begin(), out.end(), 0u );
    auto c = code;
    for ( auto const& [i, j] : pairs )
    {
      auto const digit = c % 3;
      c /= 3;
      if ( digit == 1 )
        out[i] |= 1u << j;
      else if ( digit == 2 )
        out[j] |= 1u << i;
    }
    acyclic += acyclic_by_topological_sort( out );
  }
  return big_int( acyclic );
}

inline count_report digraph_report( int n, bool enumerate )
{
  count_report r{ n, digraph_count_formula( n ), std::nullopt };
  if ( enumerate )
    r.enumerated_value = dag_count_enumerate( n );
  return r;
}

inline count_report ordering_report( int n, bool enumerate )
{
  count_report r{ n, ordering_count_formula( n, 2 ), std::nullopt };
  if ( enumerate )
    r.enumerated_value = ordering_count_enumerate( n );
  return r;
}

} // namespace peglearn::combinatorics
