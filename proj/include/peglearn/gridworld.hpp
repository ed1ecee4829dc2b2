#pragma once

// Stochastic grid navigation: map parsing, BFS horizon, demonstration
// synthesis, STL signals and specs, reward inference from ranked
// demonstrations, double Q-learning and greedy-policy evaluation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <peglearn/demo.hpp>
#include <peglearn/error.hpp>
#include <peglearn/peglearn.hpp>
#include <peglearn/stl.hpp>

namespace peglearn::grid
{

struct cell
{
  int row = 0;
  int col = 0;

  friend bool operator==( cell, cell ) = default;
  friend auto operator<=>( cell, cell ) = default;
};

inline int manhattan( cell a, cell b ) { return std::abs( a.row - b.row ) + std::abs( a.col - b.col ); }

enum class action : int
{
  up = 0,
  right = 1,
  down = 2,
  left = 3,
};

inline constexpr std::array<action, 4> all_actions{ action::up, action::right, action::down, action::left };
inline constexpr std::size_t num_actions = all_actions.size();

inline char action_letter( action a ) { return "URDL"[static_cast<int>( a )]; }

inline std::optional<action> action_from_letter( char c )
{
  switch ( c )
  {
  case 'U':
    return action::up;
  case 'R':
    return action::right;
  case 'D':
    return action::down;
  case 'L':
    return action::left;
  default:
    return std::nullopt;
  }
}

inline cell move( cell c, action a )
{
  switch ( a )
  {
  case action::up:
    return { c.row - 1, c.col };
  case action::right:
    return { c.row, c.col + 1 };
  case action::down:
    return { c.row + 1, c.col };
  case action::left:
    return { c.row, c.col - 1 };
  }
  return c;
}

/* the two actions at right angles to `a` */
inline std::array<action, 2> perpendicular( action a )
{
  if ( a == action::up || a == action::down )
    return { action::left, action::right };
  return { action::up, action::down };
}

class grid_env
{
public:
  grid_env( int width, int height, cell start, cell goal, std::vector<cell> const& obstacles, double slip_p )
      : width_( width ), height_( height ), start_( start ), goal_( goal ), slip_p_( slip_p )
  {
    if ( width < 1 || height < 1 )
      throw input_error( "grid must be at least 1x1" );
    if ( !in_bounds( start ) || !in_bounds( goal ) )
      throw input_error( "start and goal must lie inside the grid" );
    if ( start == goal )
      throw input_error( "start and goal must differ" );
    if ( !( slip_p >= 0.0 && slip_p <= 0.8 ) )
      throw input_error( "slip probability must lie in [0, 0.8]" );
    blocked_.assign( static_cast<std::size_t>( width * height ), 0 );
    for ( auto const& o : obstacles )
    {
      if ( !in_bounds( o ) )
        throw input_error( "obstacle outside the grid" );
      if ( o == start || o == goal )
        throw input_error( "start and goal cannot be obstacles" );
      if ( !blocked_[index( o )] )
        obstacles_.push_back( o );
      blocked_[index( o )] = 1;
    }
    std::sort( obstacles_.begin(), obstacles_.end() );
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  cell start() const noexcept { return start_; }
  cell goal() const noexcept { return goal_; }
  double slip() const noexcept { return slip_p_; }
  std::vector<cell> const& obstacles() const noexcept { return obstacles_; }
  std::size_t num_states() const noexcept { return blocked_.size(); }

  grid_env with_slip( double p ) const { return grid_env( width_, height_, start_, goal_, obstacles_, p ); }

  bool in_bounds( cell c ) const noexcept { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }
  bool is_obstacle( cell c ) const { return blocked_[index( c )] != 0; }
  bool is_terminal( cell c ) const { return c == goal_ || is_obstacle( c ); }

  std::size_t index( cell c ) const noexcept { return static_cast<std::size_t>( c.row * width_ + c.col ); }
  cell at( std::size_t idx ) const noexcept
  {
    return { static_cast<int>( idx ) / width_, static_cast<int>( idx ) % width_ };
  }

  /* Bumping into the border leaves the agent in place. */
  cell step_deterministic( cell c, action a ) const
  {
    auto const next = move( c, a );
    return in_bounds( next ) ? next : c;
  }

  /* With probability slip() the action is replaced by a uniformly chosen perpendicular one. */
  template<typename Rng>
  cell step( cell c, action a, Rng& rng ) const
  {
    if ( slip_p_ > 0.0 && std::uniform_real_distribution<double>( 0.0, 1.0 )( rng ) < slip_p_ )
      a = perpendicular( a )[std::uniform_int_distribution<int>( 0, 1 )( rng )];
    return step_deterministic( c, a );
  }

  /* Episode length limit. */
  std::size_t step_cap() const noexcept { return static_cast<std::size_t>( 4 * ( width_ + height_ ) ); }

private:
  int width_;
  int height_;
  cell start_;
  cell goal_;
  double slip_p_;
  std::vector<cell> obstacles_;
  std::vector<char> blocked_;
};

/* Text map: one row per line, `S` start, `G` goal, `#` obstacle, `.` free. */
inline grid_env parse_grid_map( std::string const& text, double slip_p )
{
  std::vector<std::string> rows;
  std::istringstream in( text );
  std::string line;
  while ( std::getline( in, line ) )
  {
    if ( !line.empty() && line.back() == '\r' )
      line.pop_back();
    if ( line.empty() || line.front() == ';' )
      continue;
    rows.push_back( line );
  }
  if ( rows.empty() )
    throw input_error( "grid map is empty" );
  auto const width = rows.front().size();
  std::optional<cell> start, goal;
  std::vector<cell> obstacles;
  for ( std::size_t r = 0; r < rows.size(); ++r )
  {
    if ( rows[r].size() != width )
      throw input_error( "grid map row " + std::to_string( r + 1 ) + " has a different width" );
    for ( std::size_t c = 0; c < width; ++c )
    {
      cell const here{ static_cast<int>( r ), static_cast<int>( c ) };
      switch ( rows[r][c] )
      {
      case 'S':
        if ( start )
          throw input_error( "grid map has more than one start" );
        start = here;
        break;
      case 'G':
        if ( goal )
          throw input_error( "grid map has more than one goal" );
        goal = here;
        break;
      case '#':
        obstacles.push_back( here );
        break;
      case '.':
        break;
      default:
        throw input_error( "grid map: unexpected character '" + std::string( 1, rows[r][c] ) + "' at row " +
                           std::to_string( r + 1 ) + ", column " + std::to_string( c + 1 ) );
      }
    }
  }
  if ( !start || !goal )
    throw input_error( "grid map needs exactly one S and one G" );
  return grid_env( static_cast<int>( width ), static_cast<int>( rows.size() ), *start, *goal, obstacles, slip_p );
}

inline std::string format_grid_map( grid_env const& env )
{
  std::string out;
  for ( int r = 0; r < env.height(); ++r )
  {
    for ( int c = 0; c < env.width(); ++c )
    {
      cell const here{ r, c };
      out += here == env.start() ? 'S' : here == env.goal() ? 'G' : env.is_obstacle( here ) ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

/******************************************************************************
 * Shortest paths
 ******************************************************************************/

/* BFS step counts to the nearest target cell through non-obstacle cells; -1 where unreachable.
 * Targets may be obstacles themselves. */
inline std::vector<int> bfs_distances( grid_env const& env, std::span<cell const> targets )
{
  std::vector<int> dist( env.num_states(), -1 );
  std::deque<cell> queue;
  for ( auto t : targets )
  {
    dist[env.index( t )] = 0;
    queue.push_back( t );
  }
  while ( !queue.empty() )
  {
    auto const c = queue.front();
    queue.pop_front();
    for ( auto a : all_actions )
    {
      auto const nb = move( c, a );
      if ( !env.in_bounds( nb ) || env.is_obstacle( nb ) || dist[env.index( nb )] >= 0 )
        continue;
      dist[env.index( nb )] = dist[env.index( c )] + 1;
      queue.push_back( nb );
    }
  }
  return dist;
}

/* Length of the shortest obstacle-free 4-connected path from start to goal. */
inline int bfs_shortest_path_len( grid_env const& env )
{
  cell const goal[] = { env.goal() };
  auto const d = bfs_distances( env, goal )[env.index( env.start() )];
  if ( d < 0 )
    throw input_error( "goal is unreachable from start" );
  return d;
}

/******************************************************************************
 * Rollouts and signals
 ******************************************************************************/

enum class terminal_kind
{
  goal,
  obstacle,
  timeout,
};

inline char const* to_string( terminal_kind k )
{
  switch ( k )
  {
  case terminal_kind::goal:
    return "goal";
  case terminal_kind::obstacle:
    return "obstacle";
  case terminal_kind::timeout:
    return "timeout";
  }
  return "?";
}

/* cells[0] is the start; actions[k] moved the agent from cells[k] to cells[k + 1]. */
struct rollout
{
  std::vector<cell> cells;
  std::vector<action> actions;
  terminal_kind terminal = terminal_kind::timeout;
};

template<typename Policy, typename Rng>
rollout run_episode( grid_env const& env, Policy&& policy, Rng& rng, std::size_t cap )
{
  rollout out;
  out.cells.push_back( env.start() );
  for ( std::size_t k = 0; k < cap; ++k )
  {
    auto const c = out.cells.back();
    action const a = policy( c, rng );
    auto const next = env.step( c, a, rng );
    out.actions.push_back( a );
    out.cells.push_back( next );
    if ( next == env.goal() )
    {
      out.terminal = terminal_kind::goal;
      return out;
    }
    if ( env.is_obstacle( next ) )
    {
      out.terminal = terminal_kind::obstacle;
      return out;
    }
  }
  out.terminal = terminal_kind::timeout;
  return out;
}

/* d_obs: Manhattan distance to the nearest obstacle (width + height when there
 * are none); d_goal: Manhattan distance to the goal; t: sample index. */
inline stl::trace signals_from_rollout( grid_env const& env, rollout const& path )
{
  if ( path.cells.empty() )
    throw std::invalid_argument( "signals_from_rollout: empty rollout" );
  std::vector<double> d_obs, d_goal, t;
  for ( std::size_t k = 0; k < path.cells.size(); ++k )
  {
    auto const c = path.cells[k];
    int nearest = env.width() + env.height();
    for ( auto const& o : env.obstacles() )
      nearest = std::min( nearest, manhattan( c, o ) );
    d_obs.push_back( nearest );
    d_goal.push_back( manhattan( c, env.goal() ) );
    t.push_back( static_cast<double>( k ) );
  }
  return stl::trace( { { "d_obs", std::move( d_obs ) }, { "d_goal", std::move( d_goal ) }, { "t", std::move( t ) } } );
}

/* Avoid obstacles, eventually reach the goal, and the BFS-timed goal spec. */
inline spec_set grid_specs( grid_env const& env )
{
  auto const t_goal = bfs_shortest_path_len( env );
  stl::interval const whole{ 0, std::nullopt };
  return spec_set( {
      { "phi1", stl::make_always( whole, stl::make_pred( "d_obs", stl::comparator::ge, 1.0 ) ), std::nullopt },
      { "phi2", stl::make_eventually( whole, stl::make_pred( "d_goal", stl::comparator::lt, 1.0 ) ), std::nullopt },
      { "phi3", stl::make_eventually( whole, stl::make_pred( "t", stl::comparator::le, t_goal ) ), std::nullopt },
  } );
}

/******************************************************************************
 * Demonstration synthesis
 ******************************************************************************/

struct grid_demo
{
  demonstration demo;
  rollout path;
};

/* The first action (in U, R, D, L order) that steps closer along `dist`. */
inline action descend( grid_env const& env, std::vector<int> const& dist, cell c )
{
  auto best = all_actions[0];
  int best_d = std::numeric_limits<int>::max();
  for ( auto a : all_actions )
  {
    auto const nb = env.step_deterministic( c, a );
    auto const d = dist[env.index( nb )];
    if ( d >= 0 && d < best_d )
    {
      best_d = d;
      best = a;
    }
  }
  return best;
}

inline constexpr std::size_t max_demo_retries = 1000;

inline grid_demo make_grid_demo( grid_env const& env, std::string id, std::string kind, rollout path )
{
  grid_demo out;
  out.demo.id = std::move( id );
  out.demo.trace = signals_from_rollout( env, path );
  out.demo.metadata["kind"] = std::move( kind );
  out.demo.metadata["terminal"] = to_string( path.terminal );
  out.path = std::move( path );
  return out;
}

/* Good demos follow the BFS route under slip noise and are redrawn until they
 * reach the goal without touching an obstacle. Bad demos alternate between
 * heading for the nearest obstacle and a uniform random walk. */
inline std::vector<grid_demo> synth_demos( grid_env const& env, std::size_t n_good, std::size_t n_bad, std::uint64_t seed )
{
  std::mt19937_64 rng( seed );
  cell const goal[] = { env.goal() };
  auto const to_goal = bfs_distances( env, goal );
  if ( to_goal[env.index( env.start() )] < 0 )
    throw input_error( "goal is unreachable from start" );
  auto const to_obstacle = bfs_distances( env, env.obstacles() );

  std::vector<grid_demo> demos;
  for ( std::size_t i = 0; i < n_good; ++i )
  {
    bool done = false;
    for ( std::size_t attempt = 0; attempt < max_demo_retries && !done; ++attempt )
    {
      auto path = run_episode( env, [&]( cell c, auto& ) { return descend( env, to_goal, c ); }, rng, env.step_cap() );
      if ( path.terminal == terminal_kind::goal )
      {
        demos.push_back( make_grid_demo( env, "good_" + std::to_string( i ), "good", std::move( path ) ) );
        done = true;
      }
    }
    if ( !done )
      throw input_error( "could not synthesize a goal-reaching demonstration after " +
                         std::to_string( max_demo_retries ) + " attempts" );
  }

  auto const random_walk = []( cell, auto& r ) {
    return all_actions[std::uniform_int_distribution<std::size_t>( 0, num_actions - 1 )( r )];
  };
  for ( std::size_t i = 0; i < n_bad; ++i )
  {
    rollout path;
    if ( i % 2 == 0 && !env.obstacles().empty() )
      path = run_episode( env, [&]( cell c, auto& ) { return descend( env, to_obstacle, c ); }, rng, env.step_cap() );
    else
      path = run_episode( env, random_walk, rng, env.step_cap() );
    demos.push_back( make_grid_demo( env, "bad_" + std::to_string( i ), "bad", std::move( path ) ) );
  }
  return demos;
}

inline nlohmann::ordered_json grid_demo_to_json( grid_demo const& d )
{
  auto doc = trajectory_to_json( d.demo );
  auto cells = nlohmann::ordered_json::array();
  for ( auto c : d.path.cells )
    cells.push_back( { c.row, c.col } );
  doc["cells"] = std::move( cells );
  std::string actions;
  for ( auto a : d.path.actions )
    actions += action_letter( a );
  doc["actions"] = actions;
  return doc;
}

/******************************************************************************
 * Rewards
 ******************************************************************************/

struct reward_table
{
  int width = 0;
  int height = 0;
  std::vector<double> values; /* row-major */

  double operator()( cell c ) const { return values[static_cast<std::size_t>( c.row * width + c.col )]; }
  double& operator()( cell c ) { return values[static_cast<std::size_t>( c.row * width + c.col )]; }
};

/* Each visited cell takes the best cumulative score r = Z w among the demos
 * that visit it, rescaled to [0, 1]; unvisited free cells get -margin,
 * obstacles -1 and the goal +1. */
inline reward_table infer_state_rewards( grid_env const& env, std::span<rollout const> paths, rating_matrix const& z,
                                         weight_vector const& w, double margin = 0.1 )
{
  if ( paths.size() != z.rows() )
    throw std::invalid_argument( "infer_state_rewards: one rollout per rating row required" );
  auto const scores = cumulative_scores( z, w ).scores;

  auto const ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> best( env.num_states(), ninf );
  for ( std::size_t d = 0; d < paths.size(); ++d )
    for ( auto c : paths[d].cells )
      best[env.index( c )] = std::max( best[env.index( c )], scores[d] );

  double lo = std::numeric_limits<double>::infinity(), hi = ninf;
  for ( auto v : best )
    if ( v != ninf )
    {
      lo = std::min( lo, v );
      hi = std::max( hi, v );
    }

  reward_table out{ env.width(), env.height(), std::vector<double>( env.num_states(), -margin ) };
  for ( std::size_t s = 0; s < env.num_states(); ++s )
  {
    auto const c = env.at( s );
    if ( env.is_obstacle( c ) )
      out.values[s] = -1.0;
    else if ( c == env.goal() )
      out.values[s] = 1.0;
    else if ( best[s] != ninf )
      out.values[s] = hi > lo ? ( best[s] - lo ) / ( hi - lo ) : 1.0;
  }
  return out;
}

/* Environment reward (goal +1, obstacle -1, otherwise -step_cost) plus the
 * potential difference gamma * R(next) - R(from), with terminal cells at
 * potential 0. The learned table thus shapes exploration without changing
 * which policies are optimal for the environment reward. */
inline double transition_reward( grid_env const& env, reward_table const& rewards, cell from, cell next, double gamma,
                                 double step_cost )
{
  double base = -step_cost;
  if ( next == env.goal() )
    base = 1.0;
  else if ( env.is_obstacle( next ) )
    base = -1.0;
  auto const potential_next = env.is_terminal( next ) ? 0.0 : rewards( next );
  return base + gamma * potential_next - rewards( from );
}

/******************************************************************************
 * Double Q-learning
 ******************************************************************************/

struct q_tables
{
  std::size_t states = 0;
  std::vector<double> a; /* states x num_actions */
  std::vector<double> b;

  double combined( std::size_t s, action act ) const
  {
    auto const k = s * num_actions + static_cast<std::size_t>( act );
    return a[k] + b[k];
  }
};

struct q_hyper
{
  double gamma = 0.8;
  double alpha = 0.1;
  std::size_t episodes = 20000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /* fraction of episodes over which epsilon decays linearly */
  double decay_fraction = 0.8;
  /* extra cost of every non-terminal step */
  double step_cost = 0.1;
  std::uint64_t seed = 0;
};

inline void validate( q_hyper const& h )
{
  if ( !( h.gamma >= 0.0 && h.gamma < 1.0 ) )
    throw std::invalid_argument( "gamma must lie in [0, 1)" );
  if ( !( h.alpha > 0.0 && h.alpha <= 1.0 ) )
    throw std::invalid_argument( "alpha must lie in (0, 1]" );
  if ( h.episodes < 1 )
    throw std::invalid_argument( "need at least one episode" );
  if ( !( h.epsilon_start >= 0.0 && h.epsilon_start <= 1.0 && h.epsilon_end >= 0.0 && h.epsilon_end <= 1.0 ) )
    throw std::invalid_argument( "epsilon bounds must lie in [0, 1]" );
  if ( !( h.decay_fraction > 0.0 && h.decay_fraction <= 1.0 ) )
    throw std::invalid_argument( "decay_fraction must lie in (0, 1]" );
  if ( !( h.step_cost >= 0.0 ) )
    throw std::invalid_argument( "step_cost must be non-negative" );
}

/* argmax over actions of a per-action score; ties go to the lowest action index. */
template<typename Score>
action argmax_action( Score&& score )
{
  auto best = all_actions[0];
  double best_v = score( best );
  for ( std::size_t k = 1; k < num_actions; ++k )
  {
    auto const v = score( all_actions[k] );
    if ( v > best_v )
    {
      best_v = v;
      best = all_actions[k];
    }
  }
  return best;
}

inline action greedy_action( q_tables const& q, std::size_t s )
{
  return argmax_action( [&]( action a ) { return q.combined( s, a ); } );
}

inline q_tables double_q_learn( grid_env const& env, reward_table const& rewards, q_hyper const& h )
{
  validate( h );
  auto const ns = env.num_states();
  q_tables q{ ns, std::vector<double>( ns * num_actions, 0.0 ), std::vector<double>( ns * num_actions, 0.0 ) };
  std::mt19937_64 rng( h.seed );
  std::uniform_real_distribution<double> unit( 0.0, 1.0 );
  std::uniform_int_distribution<std::size_t> any_action( 0, num_actions - 1 );
  auto const decay_episodes = std::max( 1.0, h.decay_fraction * static_cast<double>( h.episodes ) );

  for ( std::size_t ep = 0; ep < h.episodes; ++ep )
  {
    auto const progress = std::min( 1.0, static_cast<double>( ep ) / decay_episodes );
    auto const epsilon = h.epsilon_start + ( h.epsilon_end - h.epsilon_start ) * progress;
    auto c = env.start();
    for ( std::size_t k = 0; k < env.step_cap(); ++k )
    {
      auto const s = env.index( c );
      auto const act = unit( rng ) < epsilon ? all_actions[any_action( rng )] : greedy_action( q, s );
      auto const next = env.step( c, act, rng );
      auto const r = transition_reward( env, rewards, c, next, h.gamma, h.step_cost );
      bool const terminal = env.is_terminal( next );

      /* update one table, evaluating its argmax with the other */
      bool const update_a = unit( rng ) < 0.5;
      auto& upd = update_a ? q.a : q.b;
      auto const& other = update_a ? q.b : q.a;
      auto const sn = env.index( next );
      double target = r;
      if ( !terminal )
      {
        auto const a_star = argmax_action( [&]( action a ) { return upd[sn * num_actions + static_cast<std::size_t>( a )]; } );
        target += h.gamma * other[sn * num_actions + static_cast<std::size_t>( a_star )];
      }
      auto& entry = upd[s * num_actions + static_cast<std::size_t>( act )];
      entry += h.alpha * ( target - entry );

      c = next;
      if ( terminal )
        break;
    }
  }
  return q;
}

/* Greedy action per cell (row-major). */
inline std::vector<action> greedy_policy( q_tables const& q )
{
  std::vector<action> out;
  for ( std::size_t s = 0; s < q.states; ++s )
    out.push_back( greedy_action( q, s ) );
  return out;
}

/* Fraction of greedy rollouts that reach the goal within the step cap.
 * Trial k draws from its own generator seeded with (seed, k). */
inline double evaluate_policy( grid_env const& env, std::span<action const> policy, std::size_t trials, std::uint64_t seed )
{
  if ( trials < 1 )
    throw std::invalid_argument( "evaluate_policy: need at least one trial" );
  if ( policy.size() != env.num_states() )
    throw std::invalid_argument( "evaluate_policy: policy does not cover the grid" );
  std::size_t successes = 0;
  for ( std::size_t k = 0; k < trials; ++k )
  {
    std::seed_seq seq{ static_cast<std::uint32_t>( seed ), static_cast<std::uint32_t>( seed >> 32 ),
                       static_cast<std::uint32_t>( k ) };
    std::mt19937_64 rng( seq );
    auto const path = run_episode( env, [&]( cell c, auto& ) { return policy[env.index( c )]; }, rng, env.step_cap() );
    successes += path.terminal == terminal_kind::goal;
  }
  return static_cast<double>( successes ) / static_cast<double>( trials );
}

inline double evaluate_policy( grid_env const& env, q_tables const& q, std::size_t trials, std::uint64_t seed )
{
  auto const policy = greedy_policy( q );
  return evaluate_policy( env, policy, trials, seed );
}

/******************************************************************************
 * Export
 ******************************************************************************/

/* Row-major heatmap, one CSV row per grid row. */
inline std::string format_reward_csv( reward_table const& r )
{
  std::string out;
  for ( int row = 0; row < r.height; ++row )
  {
    for ( int col = 0; col < r.width; ++col )
    {
      if ( col )
        out += ',';
      out += io::format_double( r( cell{ row, col } ) );
    }
    out += '\n';
  }
  return out;
}

/* One CSV row per grid row: action letter per free cell, `#` obstacle, `G` goal. */
inline std::string format_policy_csv( grid_env const& env, std::span<action const> policy )
{
  std::string out;
  for ( int row = 0; row < env.height(); ++row )
  {
    for ( int col = 0; col < env.width(); ++col )
    {
      cell const c{ row, col };
      if ( col )
        out += ',';
      out += env.is_obstacle( c ) ? '#' : c == env.goal() ? 'G' : action_letter( policy[env.index( c )] );
    }
    out += '\n';
  }
  return out;
}

inline std::vector<action> parse_policy_csv( grid_env const& env, std::string const& text )
{
  std::vector<action> policy( env.num_states(), action::up );
  std::istringstream in( text );
  std::string line;
  int row = 0;
  while ( std::getline( in, line ) )
  {
    if ( !line.empty() && line.back() == '\r' )
      line.pop_back();
    if ( line.empty() || ( line.front() == '#' && line.size() > 1 && line[1] == ' ' ) )
      continue;
    auto const cells = io::split_csv_line( line );
    if ( row >= env.height() || static_cast<int>( cells.size() ) != env.width() )
      throw input_error( "policy CSV does not match the grid shape" );
    for ( int col = 0; col < env.width(); ++col )
    {
      auto const& tok = cells[static_cast<std::size_t>( col )];
      if ( tok.size() != 1 )
        throw input_error( "policy CSV: bad cell at row " + std::to_string( row + 1 ) );
      if ( auto a = action_from_letter( tok[0] ) )
        policy[env.index( { row, col } )] = *a;
      else if ( tok[0] != '#' && tok[0] != 'G' )
        throw input_error( "policy CSV: unknown action '" + tok + "'" );
    }
    ++row;
  }
  if ( row != env.height() )
    throw input_error( "policy CSV does not match the grid shape" );
  return policy;
}

} // namespace peglearn::grid
