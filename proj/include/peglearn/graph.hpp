#pragma once

// Adjacency-matrix digraphs over specification indices and the acyclic
// performance graph built on top of them.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>
#include <utility>

#include <peglearn/error.hpp>

namespace peglearn
{

/* n x n non-negative edge weights; 0 means "no edge", the diagonal is always 0. */
class weighted_digraph
{
public:
  weighted_digraph() = default;
  explicit weighted_digraph( std::size_t n ) : n_( n ), adj_( n * n, 0.0 ) {}

  std::size_t size() const noexcept { return n_; }

  double operator()( std::size_t from, std::size_t to ) const { return adj_[from * n_ + to]; }

  void set( std::size_t from, std::size_t to, double w )
  {
    if ( from >= n_ || to >= n_ )
      throw std::out_of_range( "edge endpoint out of range" );
    if ( from == to && w != 0.0 )
      throw std::invalid_argument( "self-loops are not allowed" );
    if ( !( w >= 0.0 ) || !std::isfinite( w ) )
      throw std::invalid_argument( "edge weights must be finite and >= 0" );
    adj_[from * n_ + to] = w;
  }

  bool has_edge( std::size_t from, std::size_t to ) const { return ( *this )( from, to ) != 0.0; }

  std::size_t edge_count() const
  {
    std::size_t c = 0;
    for ( auto w : adj_ )
      c += w != 0.0;
    return c;
  }

  std::vector<double> const& adjacency() const noexcept { return adj_; }

  friend bool operator==( weighted_digraph const&, weighted_digraph const& ) = default;

private:
  std::size_t n_ = 0;
  std::vector<double> adj_;
};

/* Some directed cycle as a node sequence c0 -> c1 -> ... -> c0, if any.
 * Deterministic: DFS roots and successors are visited in index order. */
inline std::optional<std::vector<std::size_t>> find_cycle( weighted_digraph const& g )
{
  auto const n = g.size();
  enum : char { white, grey, black };
  std::vector<char> color( n, white );

  for ( std::size_t root = 0; root < n; ++root )
  {
    if ( color[root] != white )
      continue;
    /* (node, next successor to try) */
    std::vector<std::pair<std::size_t, std::size_t>> stack{ { root, 0 } };
    color[root] = grey;
    while ( !stack.empty() )
    {
      auto& [u, next] = stack.back();
      if ( next == n )
      {
        color[u] = black;
        stack.pop_back();
        continue;
      }
      auto const v = next++;
      if ( !g.has_edge( u, v ) )
        continue;
      if ( color[v] == grey )
      {
        std::vector<std::size_t> cycle;
        for ( auto it = stack.begin(); it != stack.end(); ++it )
          if ( it->first == v || !cycle.empty() )
            cycle.push_back( it->first );
        return cycle;
      }
      if ( color[v] == white )
      {
        color[v] = grey;
        stack.emplace_back( v, 0 );
      }
    }
  }
  return std::nullopt;
}

inline bool is_acyclic( weighted_digraph const& g ) { return !find_cycle( g ); }

/* Kahn's algorithm, smallest ready index first. Throws on a cycle. */
inline std::vector<std::size_t> topological_order( weighted_digraph const& g )
{
  auto const n = g.size();
  std::vector<std::size_t> indegree( n, 0 );
  for ( std::size_t u = 0; u < n; ++u )
    for ( std::size_t v = 0; v < n; ++v )
      indegree[v] += g.has_edge( u, v );

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for ( std::size_t v = 0; v < n; ++v )
    if ( indegree[v] == 0 )
      ready.push( v );

  std::vector<std::size_t> order;
  order.reserve( n );
  while ( !ready.empty() )
  {
    auto const u = ready.top();
    ready.pop();
    order.push_back( u );
    for ( std::size_t v = 0; v < n; ++v )
      if ( g.has_edge( u, v ) && --indegree[v] == 0 )
        ready.push( v );
  }
  if ( order.size() != n )
    throw invariant_error( "topological_order: graph contains a cycle" );
  return order;
}

/* Nodes with a directed path into `v` (not including v itself). */
inline std::vector<std::size_t> ancestors( weighted_digraph const& g, std::size_t v )
{
  auto const n = g.size();
  std::vector<char> seen( n, 0 );
  std::vector<std::size_t> stack{ v };
  while ( !stack.empty() )
  {
    auto const u = stack.back();
    stack.pop_back();
    for ( std::size_t p = 0; p < n; ++p )
      if ( g.has_edge( p, u ) && !seen[p] )
      {
        seen[p] = 1;
        stack.push_back( p );
      }
  }
  std::vector<std::size_t> out;
  for ( std::size_t u = 0; u < n; ++u )
    if ( seen[u] && u != v )
      out.push_back( u );
  return out;
}

/* A weighted digraph known to be acyclic with no bidirectional pair
 * (hence at most n(n-1)/2 edges). */
class performance_dag
{
public:
  performance_dag() = default;

  /* Validates the invariants; throws invariant_error otherwise. */
  static performance_dag from_digraph( weighted_digraph g )
  {
    auto const n = g.size();
    for ( std::size_t i = 0; i < n; ++i )
      for ( std::size_t j = i + 1; j < n; ++j )
        if ( g.has_edge( i, j ) && g.has_edge( j, i ) )
          throw invariant_error( "bidirectional edge between " + std::to_string( i ) + " and " + std::to_string( j ) );
    if ( auto cycle = find_cycle( g ) )
      throw invariant_error( "graph contains a directed cycle of length " + std::to_string( cycle->size() ) );
    performance_dag d;
    d.g_ = std::move( g );
    return d;
  }

  static performance_dag empty( std::size_t n ) { return from_digraph( weighted_digraph( n ) ); }

  std::size_t size() const noexcept { return g_.size(); }
  double operator()( std::size_t from, std::size_t to ) const { return g_( from, to ); }
  bool has_edge( std::size_t from, std::size_t to ) const { return g_.has_edge( from, to ); }
  std::size_t edge_count() const { return g_.edge_count(); }
  weighted_digraph const& graph() const noexcept { return g_; }

  friend bool operator==( performance_dag const&, performance_dag const& ) = default;

private:
  weighted_digraph g_;
};

inline std::vector<std::size_t> topological_order( performance_dag const& d ) { return topological_order( d.graph() ); }

} // namespace peglearn
