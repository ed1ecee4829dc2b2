#pragma once

// Performance-graph learning: one local DAG per demonstration, edge-wise
// aggregation, reduction of the aggregate to a global DAG, and the
// ancestor-count weights and cumulative scores derived from it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <peglearn/demo.hpp>
#include <peglearn/error.hpp>
#include <peglearn/graph.hpp>

namespace peglearn
{

inline constexpr double default_epsilon = 0.05;

/******************************************************************************
 * Local graphs
 ******************************************************************************/

/* Spec indices sorted by score, non-increasing; equal scores keep index order. */
inline std::vector<std::size_t> sort_by_score( std::span<double const> row )
{
  std::vector<std::size_t> idx( row.size() );
  std::iota( idx.begin(), idx.end(), 0 );
  std::stable_sort( idx.begin(), idx.end(), [&]( auto a, auto b ) { return row[a] > row[b]; } );
  return idx;
}

/* Local DAG of one rating row. `visit( from, to )` is called once per ordered
 * pair of the sorted row, before the threshold test. */
template<typename PairVisitor>
performance_dag local_graph( std::span<double const> row, double epsilon, PairVisitor&& visit )
{
  if ( row.empty() )
    throw std::invalid_argument( "local_graph: empty rating row" );
  if ( !( epsilon >= 0.0 ) )
    throw std::invalid_argument( "local_graph: epsilon must be >= 0" );
  for ( auto v : row )
    if ( !std::isfinite( v ) )
      throw input_error( "local_graph: ratings must be finite (normalize infinite robustness first)" );

  auto const n = row.size();
  auto const sorted = sort_by_score( row );
  weighted_digraph g( n );
  for ( std::size_t k = 0; k + 1 < n; ++k )
  {
    auto const from = sorted[k];
    for ( std::size_t j = k + 1; j < n; ++j )
    {
      auto const to = sorted[j];
      visit( from, to );
      auto const diff = row[from] - row[to];
      /* each ordered pair is visited once, so assignment equals accumulation */
      if ( diff >= epsilon )
        g.set( from, to, diff );
    }
  }
  return performance_dag::from_digraph( std::move( g ) );
}

inline performance_dag local_graph( std::span<double const> row, double epsilon = default_epsilon )
{
  return local_graph( row, epsilon, []( std::size_t, std::size_t ) {} );
}

/******************************************************************************
 * Aggregation and reduction
 ******************************************************************************/

/* Edge-wise arithmetic mean; the result may hold bidirectional pairs. */
inline weighted_digraph aggregate( std::span<performance_dag const> locals )
{
  if ( locals.empty() )
    throw std::invalid_argument( "aggregate: no local graphs" );
  auto const n = locals.front().size();
  std::vector<double> sum( n * n, 0.0 );
  for ( auto const& g : locals )
  {
    if ( g.size() != n )
      throw std::invalid_argument( "aggregate: local graphs differ in size" );
    auto const& adj = g.graph().adjacency();
    for ( std::size_t k = 0; k < sum.size(); ++k )
      sum[k] += adj[k];
  }
  weighted_digraph out( n );
  auto const m = static_cast<double>( locals.size() );
  for ( std::size_t i = 0; i < n; ++i )
    for ( std::size_t j = 0; j < n; ++j )
      if ( i != j )
        out.set( i, j, sum[i * n + j] / m );
  return out;
}

struct cycle_repair
{
  std::vector<std::size_t> cycle;
  std::size_t from;
  std::size_t to;
  double weight;
};

struct reduction_result
{
  performance_dag dag;
  /* edges dropped to break cycles that survived the pairwise reduction */
  std::vector<cycle_repair> repairs;
};

/* out[i][j] = max(0, g[i][j] - g[j][i]), zeroed below epsilon. Any cycle left
 * afterwards is broken by removing its lightest edge, and reported. */
inline reduction_result reduce_to_dag_checked( weighted_digraph const& g, double epsilon = default_epsilon )
{
  if ( !( epsilon >= 0.0 ) )
    throw std::invalid_argument( "reduce_to_dag: epsilon must be >= 0" );
  auto const n = g.size();
  weighted_digraph out( n );
  for ( std::size_t i = 0; i < n; ++i )
  {
    if ( g( i, i ) != 0.0 )
      throw std::invalid_argument( "reduce_to_dag: self-loop in input" );
    for ( std::size_t j = 0; j < n; ++j )
    {
      if ( i == j )
        continue;
      auto w = std::max( 0.0, g( i, j ) - g( j, i ) );
      if ( w < epsilon )
        w = 0.0;
      out.set( i, j, w );
    }
  }

  reduction_result result;
  while ( auto cycle = find_cycle( out ) )
  {
    auto const& c = *cycle;
    std::size_t best = 0;
    for ( std::size_t k = 1; k < c.size(); ++k )
      if ( out( c[k], c[( k + 1 ) % c.size()] ) < out( c[best], c[( best + 1 ) % c.size()] ) )
        best = k;
    auto const from = c[best], to = c[( best + 1 ) % c.size()];
    result.repairs.push_back( { c, from, to, out( from, to ) } );
    out.set( from, to, 0.0 );
  }
  result.dag = performance_dag::from_digraph( std::move( out ) );
  return result;
}

inline void warn_repairs( std::vector<cycle_repair> const& repairs, std::ostream& log = std::clog )
{
  for ( auto const& r : repairs )
    log << "warning: cycle of length " << r.cycle.size() << " survived reduction; removed edge " << r.from
              << " -> " << r.to << " (weight " << r.weight << ")\n";
}

inline performance_dag reduce_to_dag( weighted_digraph const& g, double epsilon = default_epsilon )
{
  auto r = reduce_to_dag_checked( g, epsilon );
  warn_repairs( r.repairs );
  return std::move( r.dag );
}

struct peglearn_options
{
  double local_epsilon = default_epsilon;
  double global_epsilon = default_epsilon;
};

inline std::vector<performance_dag> local_graphs( rating_matrix const& z, double epsilon )
{
  std::vector<performance_dag> locals;
  locals.reserve( z.rows() );
  for ( std::size_t i = 0; i < z.rows(); ++i )
    locals.push_back( local_graph( z.row( i ), epsilon ) );
  return locals;
}

/* Global performance graph with the reduction report. */
inline reduction_result learn_performance_graph( rating_matrix const& z, peglearn_options const& opts = {} )
{
  auto const locals = local_graphs( z, opts.local_epsilon );
  return reduce_to_dag_checked( aggregate( locals ), opts.global_epsilon );
}

inline performance_dag peglearn( rating_matrix const& z, double epsilon = default_epsilon )
{
  auto r = learn_performance_graph( z, { epsilon, epsilon } );
  warn_repairs( r.repairs );
  return std::move( r.dag );
}

/******************************************************************************
 * Weights, scores and orderings
 ******************************************************************************/

struct weight_vector
{
  std::vector<double> values;
  bool softmax = false;
};

/* w[j] = n - |ancestors(j)|, optionally passed through a softmax. */
inline weight_vector spec_weights( performance_dag const& dag, bool softmax = false )
{
  if ( !is_acyclic( dag.graph() ) )
    throw invariant_error( "spec_weights: cycle detected" );
  auto const n = dag.size();
  weight_vector w;
  w.softmax = softmax;
  for ( std::size_t j = 0; j < n; ++j )
    w.values.push_back( static_cast<double>( n - ancestors( dag.graph(), j ).size() ) );
  if ( softmax && n > 0 )
  {
    auto const mx = *std::max_element( w.values.begin(), w.values.end() );
    double total = 0.0;
    for ( auto& v : w.values )
      total += ( v = std::exp( v - mx ) );
    for ( auto& v : w.values )
      v /= total;
  }
  return w;
}

inline void validate_weights( weight_vector const& w )
{
  auto const n = static_cast<double>( w.values.size() );
  if ( w.values.empty() )
    throw std::invalid_argument( "weight vector is empty" );
  if ( w.softmax )
  {
    double total = 0.0;
    for ( auto v : w.values )
    {
      if ( !( v >= 0.0 && v <= 1.0 ) )
        throw std::invalid_argument( "softmax weights must lie in [0, 1]" );
      total += v;
    }
    if ( std::abs( total - 1.0 ) > 1e-9 )
      throw std::invalid_argument( "softmax weights must sum to 1" );
    return;
  }
  for ( auto v : w.values )
    if ( !( v >= 1.0 && v <= n ) )
      throw std::invalid_argument( "specification weights must lie in [1, n]" );
}

struct ranking
{
  std::vector<double> scores;
  std::vector<std::size_t> order; /* demo indices, best first */
};

/* r = Z w; `order` is a stable non-increasing sort of r. */
inline ranking cumulative_scores( rating_matrix const& z, weight_vector const& w )
{
  if ( w.values.size() != z.cols() )
    throw std::invalid_argument( "cumulative_scores: weight vector length differs from spec count" );
  validate_weights( w );
  ranking r;
  r.scores.resize( z.rows() );
  for ( std::size_t i = 0; i < z.rows(); ++i )
  {
    double acc = 0.0;
    auto const row = z.row( i );
    for ( std::size_t j = 0; j < row.size(); ++j )
      acc += row[j] * w.values[j];
    r.scores[i] = acc;
  }
  r.order = sort_by_score( r.scores );
  return r;
}

/* Importance ranks, 1 = most important; ties share a rank. */
using rank_vector = std::vector<int>;

/* Dense ranks: highest value -> 1, equal values share a rank. */
inline rank_vector dense_ranks_descending( std::span<double const> values )
{
  auto const sorted = sort_by_score( values );
  rank_vector ranks( values.size(), 0 );
  int rank = 0;
  for ( std::size_t k = 0; k < sorted.size(); ++k )
  {
    if ( k == 0 || values[sorted[k]] != values[sorted[k - 1]] )
      ++rank;
    ranks[sorted[k]] = rank;
  }
  return ranks;
}

inline rank_vector ordering_from_weights( weight_vector const& w )
{
  if ( w.values.empty() )
    throw std::invalid_argument( "ordering_from_weights: empty weight vector" );
  return dense_ranks_descending( w.values );
}

/******************************************************************************
 * Export
 ******************************************************************************/

inline std::string dot_escape( std::string const& s )
{
  std::string out;
  for ( char c : s )
  {
    if ( c == '"' || c == '\\' )
      out += '\\';
    out += c;
  }
  return out;
}

inline std::string export_dot( performance_dag const& dag, std::vector<std::string> const& names,
                               std::string const& header_comment = {} )
{
  if ( names.size() != dag.size() )
    throw std::invalid_argument( "export_dot: " + std::to_string( names.size() ) + " names for " +
                                 std::to_string( dag.size() ) + " nodes" );
  std::string out;
  if ( !header_comment.empty() )
    out += "// " + header_comment + "\n";
  out += "digraph performance_graph {\n";
  for ( auto const& name : names )
    out += "  \"" + dot_escape( name ) + "\";\n";
  for ( std::size_t i = 0; i < dag.size(); ++i )
    for ( std::size_t j = 0; j < dag.size(); ++j )
      if ( dag.has_edge( i, j ) )
      {
        char label[32];
        std::snprintf( label, sizeof( label ), "%.4f", dag( i, j ) );
        out += "  \"" + dot_escape( names[i] ) + "\" -> \"" + dot_escape( names[j] ) + "\" [label=\"" + label + "\"];\n";
      }
  out += "}\n";
  return out;
}

inline nlohmann::ordered_json graph_to_json( performance_dag const& dag, std::vector<std::string> const& names )
{
  if ( names.size() != dag.size() )
    throw std::invalid_argument( "graph_to_json: name count differs from node count" );
  nlohmann::ordered_json doc;
  doc["nodes"] = names;
  auto& adj = doc["adjacency"] = nlohmann::ordered_json::array();
  for ( std::size_t i = 0; i < dag.size(); ++i )
  {
    auto row = nlohmann::ordered_json::array();
    for ( std::size_t j = 0; j < dag.size(); ++j )
      row.push_back( dag( i, j ) );
    adj.push_back( std::move( row ) );
  }
  return doc;
}

struct named_dag
{
  performance_dag dag;
  std::vector<std::string> names;
};

inline named_dag graph_from_json( nlohmann::json const& doc )
{
  if ( !doc.contains( "nodes" ) || !doc.contains( "adjacency" ) )
    throw input_error( "graph JSON needs \"nodes\" and \"adjacency\"" );
  named_dag out;
  out.names = doc["nodes"].get<std::vector<std::string>>();
  auto const n = out.names.size();
  auto const& adj = doc["adjacency"];
  if ( !adj.is_array() || adj.size() != n )
    throw input_error( "graph JSON adjacency must be an n x n array" );
  weighted_digraph g( n );
  for ( std::size_t i = 0; i < n; ++i )
  {
    if ( !adj[i].is_array() || adj[i].size() != n )
      throw input_error( "graph JSON adjacency must be an n x n array" );
    for ( std::size_t j = 0; j < n; ++j )
    {
      try
      {
        g.set( i, j, adj[i][j].get<double>() );
      }
      catch ( std::exception const& e )
      {
        throw input_error( "graph JSON entry [" + std::to_string( i ) + "][" + std::to_string( j ) + "]: " + e.what() );
      }
    }
  }
  try
  {
    out.dag = performance_dag::from_digraph( std::move( g ) );
  }
  catch ( invariant_error const& e )
  {
    throw input_error( std::string( "graph JSON is not a DAG: " ) + e.what() );
  }
  return out;
}

} // namespace peglearn
