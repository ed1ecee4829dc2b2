#pragma once

// Comparison orderings: k-means + linear SVM feature ranking, uniform random
// rank vectors, and the normalized Hamming distance used to compare them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <peglearn/demo.hpp>
#include <peglearn/error.hpp>
#include <peglearn/peglearn.hpp>

namespace peglearn::baselines
{

/* Row-major m x n point set. */
struct point_set
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<double const> row( std::size_t i ) const { return { values.data() + i * cols, cols }; }

  static point_set from( rating_matrix const& z ) { return { z.rows(), z.cols(), z.values() }; }
};

inline double squared_distance( std::span<double const> a, std::span<double const> b )
{
  double d = 0.0;
  for ( std::size_t k = 0; k < a.size(); ++k )
    d += ( a[k] - b[k] ) * ( a[k] - b[k] );
  return d;
}

/******************************************************************************
 * k-means
 ******************************************************************************/

struct kmeans_result
{
  point_set centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  /* inertia after each assignment step; non-increasing */
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

/* Lloyd's iteration from k-means++ seeding; stops when assignments are stable. */
inline kmeans_result kmeans( point_set const& pts, std::size_t k, std::uint64_t seed, std::size_t max_iters = 300 )
{
  auto const m = pts.rows, n = pts.cols;
  if ( m == 0 || n == 0 )
    throw std::invalid_argument( "kmeans: empty input" );
  if ( k == 0 || k > m )
    throw std::invalid_argument( "kmeans: need 1 <= k <= number of points" );

  std::mt19937_64 rng( seed );
  kmeans_result res;
  res.centroids = { k, n, {} };
  res.centroids.values.reserve( k * n );

  /* k-means++ seeding */
  std::vector<double> d2( m, std::numeric_limits<double>::infinity() );
  auto add_centroid = [&]( std::size_t i ) {
    auto const r = pts.row( i );
    res.centroids.values.insert( res.centroids.values.end(), r.begin(), r.end() );
    for ( std::size_t p = 0; p < m; ++p )
      d2[p] = std::min( d2[p], squared_distance( pts.row( p ), r ) );
  };
  add_centroid( std::uniform_int_distribution<std::size_t>( 0, m - 1 )( rng ) );
  for ( std::size_t c = 1; c < k; ++c )
  {
    double const total = std::accumulate( d2.begin(), d2.end(), 0.0 );
    auto const pick = total > 0.0 ? std::discrete_distribution<std::size_t>( d2.begin(), d2.end() )( rng )
                                  : std::uniform_int_distribution<std::size_t>( 0, m - 1 )( rng );
    add_centroid( pick );
  }

  res.assignments.assign( m, k );
  for ( std::size_t it = 0; it < std::max<std::size_t>( max_iters, 1 ); ++it )
  {
    bool changed = false;
    double inertia = 0.0;
    for ( std::size_t p = 0; p < m; ++p )
    {
      std::size_t best = 0;
      double best_d = squared_distance( pts.row( p ), res.centroids.row( 0 ) );
      for ( std::size_t c = 1; c < k; ++c )
      {
        auto const d = squared_distance( pts.row( p ), res.centroids.row( c ) );
        if ( d < best_d )
        {
          best_d = d;
          best = c;
        }
      }
      changed = changed || best != res.assignments[p];
      res.assignments[p] = best;
      inertia += best_d;
    }
    res.inertia_history.push_back( inertia );
    res.iterations = it + 1;
    if ( !changed )
      break;

    /* update; an empty cluster keeps its previous centroid */
    std::vector<double> sums( k * n, 0.0 );
    std::vector<std::size_t> counts( k, 0 );
    for ( std::size_t p = 0; p < m; ++p )
    {
      auto const c = res.assignments[p];
      ++counts[c];
      for ( std::size_t j = 0; j < n; ++j )
        sums[c * n + j] += pts.values[p * n + j];
    }
    for ( std::size_t c = 0; c < k; ++c )
      if ( counts[c] > 0 )
        for ( std::size_t j = 0; j < n; ++j )
          res.centroids.values[c * n + j] = sums[c * n + j] / static_cast<double>( counts[c] );
  }

  res.inertia = 0.0;
  for ( std::size_t p = 0; p < m; ++p )
    res.inertia += squared_distance( pts.row( p ), res.centroids.row( res.assignments[p] ) );
  return res;
}

/******************************************************************************
 * Linear SVM
 ******************************************************************************/

struct svm_model
{
  std::vector<double> weights;
  double bias = 0.0;

  double decision( std::span<double const> x ) const
  {
    double s = bias;
    for ( std::size_t j = 0; j < x.size(); ++j )
      s += weights[j] * x[j];
    return s;
  }
};

struct svm_options
{
  double reg = 1e-3;
  std::size_t max_iters = 100000;
  /* stop when the maximal KKT violation drops below this */
  double tol = 1e-10;
};

/* L2-regularized hinge objective: reg/2 |w|^2 + mean hinge. */
inline double svm_objective( point_set const& pts, std::span<int const> labels, svm_model const& model, double reg )
{
  double hinge = 0.0;
  for ( std::size_t p = 0; p < pts.rows; ++p )
    hinge += std::max( 0.0, 1.0 - labels[p] * model.decision( pts.row( p ) ) );
  double norm = 0.0;
  for ( auto w : model.weights )
    norm += w * w;
  return 0.5 * reg * norm + hinge / static_cast<double>( pts.rows );
}

inline double svm_hinge_loss( point_set const& pts, std::span<int const> labels, svm_model const& model )
{
  return svm_objective( pts, labels, model, 0.0 );
}

/* Minimizes the objective above (bias unregularized) through its dual with
 * box C = 1 / (reg m), by sequential minimal optimization on the maximal
 * violating pair. Deterministic. */
inline svm_model linear_svm_train( point_set const& pts, std::span<int const> labels, svm_options const& opts = {} )
{
  auto const m = pts.rows;
  if ( m == 0 || labels.size() != m )
    throw std::invalid_argument( "linear_svm_train: labels must match points" );
  if ( !( opts.reg > 0.0 ) )
    throw std::invalid_argument( "linear_svm_train: reg must be > 0" );
  bool pos = false, neg = false;
  for ( auto y : labels )
  {
    if ( y != 1 && y != -1 )
      throw std::invalid_argument( "linear_svm_train: labels must be -1 or +1" );
    pos = pos || y == 1;
    neg = neg || y == -1;
  }
  if ( !pos || !neg )
    throw std::invalid_argument( "linear_svm_train: both classes must be present" );

  double const c = 1.0 / ( opts.reg * static_cast<double>( m ) );
  std::vector<double> q( m * m );
  for ( std::size_t i = 0; i < m; ++i )
    for ( std::size_t j = 0; j < m; ++j )
    {
      auto const xi = pts.row( i ), xj = pts.row( j );
      q[i * m + j] = labels[i] * labels[j] * std::inner_product( xi.begin(), xi.end(), xj.begin(), 0.0 );
    }

  std::vector<double> alpha( m, 0.0 ), grad( m, -1.0 );
  auto const up = [&]( std::size_t t ) { return labels[t] == 1 ? alpha[t] < c : alpha[t] > 0.0; };
  auto const low = [&]( std::size_t t ) { return labels[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c; };

  for ( std::size_t it = 0; it < opts.max_iters; ++it )
  {
    std::size_t i = m, j = m;
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    for ( std::size_t t = 0; t < m; ++t )
    {
      auto const v = -labels[t] * grad[t];
      if ( up( t ) && v > gmax )
      {
        gmax = v;
        i = t;
      }
      if ( low( t ) && v < gmin )
      {
        gmin = v;
        j = t;
      }
    }
    if ( i == m || j == m || gmax - gmin < opts.tol )
      break;

    auto const old_i = alpha[i], old_j = alpha[j];
    if ( labels[i] != labels[j] )
    {
      double quad = q[i * m + i] + q[j * m + j] + 2.0 * q[i * m + j];
      if ( quad <= 0.0 )
        quad = 1e-12;
      auto const delta = ( -grad[i] - grad[j] ) / quad;
      auto const diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if ( diff > 0.0 ? alpha[j] < 0.0 : alpha[i] < 0.0 )
      {
        alpha[j] = std::max( 0.0, -diff );
        alpha[i] = alpha[j] + diff;
      }
      if ( diff > 0.0 ? alpha[i] > c : alpha[j] > c )
      {
        alpha[i] = diff > 0.0 ? c : c + diff;
        alpha[j] = alpha[i] - diff;
      }
    }
    else
    {
      double quad = q[i * m + i] + q[j * m + j] - 2.0 * q[i * m + j];
      if ( quad <= 0.0 )
        quad = 1e-12;
      auto const delta = ( grad[i] - grad[j] ) / quad;
      auto const sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if ( sum > c ? alpha[i] > c : alpha[j] < 0.0 )
      {
        alpha[i] = std::min( sum, c );
        alpha[j] = sum - alpha[i];
      }
      if ( sum > c ? alpha[j] > c : alpha[i] < 0.0 )
      {
        alpha[j] = std::min( sum, c );
        alpha[i] = sum - alpha[j];
      }
    }
    auto const di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for ( std::size_t t = 0; t < m; ++t )
      grad[t] += q[t * m + i] * di + q[t * m + j] * dj;
  }

  /* bias from the free multipliers, else the midpoint of the feasible range */
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  std::size_t free_count = 0;
  for ( std::size_t t = 0; t < m; ++t )
  {
    auto const yg = labels[t] * grad[t];
    bool const at_upper = alpha[t] >= c, at_lower = alpha[t] <= 0.0;
    if ( ( at_upper && labels[t] == -1 ) || ( at_lower && labels[t] == 1 ) )
      ub = std::min( ub, yg );
    else if ( at_upper || at_lower )
      lb = std::max( lb, yg );
    else
    {
      ++free_count;
      free_sum += yg;
    }
  }
  auto const rho = free_count ? free_sum / static_cast<double>( free_count ) : ( ub + lb ) / 2.0;

  svm_model model{ std::vector<double>( pts.cols, 0.0 ), -rho };
  for ( std::size_t t = 0; t < m; ++t )
    for ( std::size_t k = 0; k < pts.cols; ++k )
      model.weights[k] += alpha[t] * labels[t] * pts.values[t * pts.cols + k];
  for ( auto w : model.weights )
    if ( !std::isfinite( w ) )
      throw invariant_error( "linear_svm_train: non-finite weight" );
  if ( !std::isfinite( model.bias ) )
    throw invariant_error( "linear_svm_train: non-finite bias" );
  return model;
}

/******************************************************************************
 * Orderings
 ******************************************************************************/

struct kmsvm_options
{
  std::size_t k = 2;
  std::size_t max_iters = 300;
  /* train on every labeled row instead of only the two centroids */
  bool train_on_all_points = false;
  svm_options svm;
};

struct kmsvm_result
{
  rank_vector ranks;
  kmeans_result clusters;
  svm_model model;
  std::size_t good_cluster = 0;
};

inline kmsvm_result kmsvm_ordering_detailed( rating_matrix const& z, std::uint64_t seed, kmsvm_options const& opts = {} )
{
  if ( z.rows() < 2 )
    throw std::invalid_argument( "kmsvm_ordering: need at least two demonstrations" );
  auto const pts = point_set::from( z );
  kmsvm_result out;
  out.clusters = kmeans( pts, opts.k, seed, opts.max_iters );
  auto const& cl = out.clusters;

  /* mean row-sum of member rows decides which cluster is "good" */
  std::vector<double> mean_sum( opts.k, 0.0 );
  std::vector<std::size_t> count( opts.k, 0 );
  for ( std::size_t i = 0; i < z.rows(); ++i )
  {
    auto const r = z.row( i );
    mean_sum[cl.assignments[i]] += std::accumulate( r.begin(), r.end(), 0.0 );
    ++count[cl.assignments[i]];
  }
  std::size_t good = 0, bad = 0;
  double best = -std::numeric_limits<double>::infinity(), worst = std::numeric_limits<double>::infinity();
  for ( std::size_t c = 0; c < opts.k; ++c )
  {
    if ( count[c] == 0 )
      continue;
    mean_sum[c] /= static_cast<double>( count[c] );
    if ( mean_sum[c] > best )
    {
      best = mean_sum[c];
      good = c;
    }
    if ( mean_sum[c] < worst )
    {
      worst = mean_sum[c];
      bad = c;
    }
  }
  if ( good == bad || squared_distance( cl.centroids.row( good ), cl.centroids.row( bad ) ) == 0.0 )
    throw input_error( "kmsvm_ordering: no separation (identical centroids)" );
  out.good_cluster = good;

  point_set train;
  std::vector<int> labels;
  if ( opts.train_on_all_points )
  {
    train = pts;
    for ( auto a : cl.assignments )
      labels.push_back( a == good ? 1 : -1 );
  }
  else
  {
    train = { 2, pts.cols, {} };
    auto const g = cl.centroids.row( good ), b = cl.centroids.row( bad );
    train.values.insert( train.values.end(), g.begin(), g.end() );
    train.values.insert( train.values.end(), b.begin(), b.end() );
    labels = { 1, -1 };
  }
  out.model = linear_svm_train( train, labels, opts.svm );

  /* rank by |w|, dense; magnitudes within 1e-9 of the largest count as tied */
  std::vector<double> mag;
  double top = 0.0;
  for ( auto w : out.model.weights )
    top = std::max( top, std::abs( w ) );
  double const tol = 1e-9 * std::max( top, 1.0 );
  for ( auto w : out.model.weights )
    mag.push_back( std::round( std::abs( w ) / tol ) * tol );
  out.ranks = dense_ranks_descending( mag );
  return out;
}

inline rank_vector kmsvm_ordering( rating_matrix const& z, std::uint64_t seed, kmsvm_options const& opts = {} )
{
  return kmsvm_ordering_detailed( z, seed, opts ).ranks;
}

/* Each component i.i.d. uniform on {1, ..., levels}. */
inline rank_vector random_ordering( std::size_t n, int levels, std::uint64_t seed )
{
  if ( n == 0 || levels < 1 )
    throw std::invalid_argument( "random_ordering: need n >= 1 and levels >= 1" );
  std::mt19937_64 rng( seed );
  std::uniform_int_distribution<int> dist( 1, levels );
  rank_vector out( n );
  for ( auto& r : out )
    r = dist( rng );
  return out;
}

/* Fraction of positions where the vectors disagree, in [0, 1]. */
inline double hamming_distance( std::span<int const> a, std::span<int const> b )
{
  if ( a.size() != b.size() || a.empty() )
    throw std::invalid_argument( "hamming_distance: vectors must be non-empty and of equal length" );
  std::size_t diff = 0;
  for ( std::size_t i = 0; i < a.size(); ++i )
    diff += a[i] != b[i];
  return static_cast<double>( diff ) / static_cast<double>( a.size() );
}

} // namespace peglearn::baselines
