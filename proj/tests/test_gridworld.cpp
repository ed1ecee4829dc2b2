#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <peglearn/gridworld.hpp>

using namespace peglearn;
using namespace peglearn::grid;

namespace
{

char const* const five_by_five = "S....\n.#...\n...#.\n.#...\n....G\n";

grid_env sample_env( double slip = 0.2 ) { return parse_grid_map( five_by_five, slip ); }

/* Outcome distribution of one step: intended move with 1 - p, each perpendicular with p / 2. */
std::vector<std::pair<cell, double>> transitions( grid_env const& env, cell c, action a )
{
  std::vector<std::pair<cell, double>> out{ { env.step_deterministic( c, a ), 1.0 - env.slip() } };
  if ( env.slip() > 0.0 )
    for ( auto p : perpendicular( a ) )
      out.emplace_back( env.step_deterministic( c, p ), env.slip() / 2.0 );
  return out;
}

/* Probability of reaching the goal from `from` within `horizon` steps, by backward induction.
 * With `policy` empty the best action is taken at every step (the optimal ceiling). */
double reach_probability( grid_env const& env, std::vector<action> const& policy, std::size_t horizon )
{
  std::vector<double> p( env.num_states(), 0.0 );
  for ( std::size_t h = 0; h < horizon; ++h )
  {
    std::vector<double> next( env.num_states(), 0.0 );
    for ( std::size_t s = 0; s < env.num_states(); ++s )
    {
      auto const c = env.at( s );
      if ( env.is_terminal( c ) )
        continue;
      auto const value = [&]( action a ) {
        double v = 0.0;
        for ( auto const& [n, pr] : transitions( env, c, a ) )
          v += pr * ( n == env.goal() ? 1.0 : env.is_obstacle( n ) ? 0.0 : p[env.index( n )] );
        return v;
      };
      if ( policy.empty() )
        for ( auto a : all_actions )
          next[s] = std::max( next[s], value( a ) );
      else
        next[s] = value( policy[s] );
    }
    p = std::move( next );
  }
  return p[env.index( env.start() )];
}

struct pipeline
{
  std::vector<grid_demo> demos;
  rating_matrix z;
  weight_vector w;
  reward_table rewards;
};

pipeline learn_rewards( grid_env const& env, std::size_t good, std::size_t bad, std::uint64_t seed )
{
  pipeline out;
  out.demos = synth_demos( env, good, bad, seed );
  std::vector<demonstration> plain;
  std::vector<rollout> paths;
  for ( auto const& d : out.demos )
  {
    plain.push_back( d.demo );
    paths.push_back( d.path );
  }
  out.z = build_rating_matrix( plain, grid_specs( env ), 1.0 );
  out.w = spec_weights( peglearn::peglearn( out.z ) );
  out.rewards = infer_state_rewards( env, paths, out.z, out.w );
  return out;
}

} // namespace

TEST( gridworld_map, parse_and_format )
{
  auto const env = sample_env();
  EXPECT_EQ( env.width(), 5 );
  EXPECT_EQ( env.height(), 5 );
  EXPECT_EQ( env.start(), ( cell{ 0, 0 } ) );
  EXPECT_EQ( env.goal(), ( cell{ 4, 4 } ) );
  EXPECT_EQ( env.obstacles().size(), 3u );
  EXPECT_EQ( format_grid_map( env ), five_by_five );

  EXPECT_THROW( parse_grid_map( "", 0.0 ), input_error );
  EXPECT_THROW( parse_grid_map( "S.\n.\n", 0.0 ), input_error );
  EXPECT_THROW( parse_grid_map( "S.x\n..G\n", 0.0 ), input_error );
  EXPECT_THROW( parse_grid_map( "S..\n...\n", 0.0 ), input_error );
  EXPECT_THROW( parse_grid_map( "SS.\n..G\n", 0.0 ), input_error );
  EXPECT_THROW( parse_grid_map( five_by_five, 0.9 ), input_error );
}

TEST( gridworld_dynamics, border_and_slip )
{
  auto const det = sample_env( 0.0 );
  EXPECT_EQ( det.step_deterministic( { 0, 0 }, action::up ), ( cell{ 0, 0 } ) );
  EXPECT_EQ( det.step_deterministic( { 0, 0 }, action::right ), ( cell{ 0, 1 } ) );
  std::mt19937_64 rng( 1 );
  for ( int k = 0; k < 100; ++k )
    EXPECT_EQ( det.step( { 2, 2 }, action::down, rng ), ( cell{ 3, 2 } ) );

  /* with slip 0.2 about 10% of moves go each perpendicular way */
  auto const env = sample_env( 0.2 );
  std::size_t left = 0, right = 0, down = 0;
  std::size_t const n = 20000;
  for ( std::size_t k = 0; k < n; ++k )
  {
    auto const c = env.step( { 2, 2 }, action::down, rng );
    left += c == cell{ 2, 1 };
    right += c == cell{ 2, 3 };
    down += c == cell{ 3, 2 };
  }
  EXPECT_EQ( left + right + down, n );
  EXPECT_NEAR( static_cast<double>( down ) / n, 0.8, 0.015 );
  EXPECT_NEAR( static_cast<double>( left ) / n, 0.1, 0.01 );
  EXPECT_NEAR( static_cast<double>( right ) / n, 0.1, 0.01 );
}

TEST( gridworld_bfs, shortest_paths )
{
  EXPECT_EQ( bfs_shortest_path_len( parse_grid_map( "S....\n.....\n.....\n.....\n....G\n", 0.0 ) ), 8 );
  EXPECT_EQ( bfs_shortest_path_len( sample_env() ), 8 );
  /* a wall turns a 4-step path into a 12-step detour */
  EXPECT_EQ( bfs_shortest_path_len( parse_grid_map( "S....\n####.\n.....\n.....\nG....\n", 0.0 ) ), 12 );
  EXPECT_THROW( bfs_shortest_path_len( parse_grid_map( "S.#..\n..#..\n..#.G\n", 0.0 ) ), input_error );
  EXPECT_THROW( synth_demos( parse_grid_map( "S.#..\n..#..\n..#.G\n", 0.0 ), 1, 0, 1 ), input_error );
}

TEST( gridworld_signals, distances )
{
  auto const env = sample_env();
  rollout path;
  path.cells = { { 0, 0 }, { 0, 1 }, { 0, 2 } };
  path.actions = { action::right, action::right };
  auto const tr = signals_from_rollout( env, path );
  auto const d_obs = tr.signal( "d_obs" );
  auto const d_goal = tr.signal( "d_goal" );
  auto const t = tr.signal( "t" );
  /* (0,0) is two steps from the obstacle at (1,1) */
  EXPECT_EQ( d_obs[0], 2.0 );
  EXPECT_EQ( d_obs[1], 1.0 );
  EXPECT_EQ( d_obs[2], 2.0 );
  EXPECT_EQ( d_goal[0], 8.0 );
  EXPECT_EQ( d_goal[2], 6.0 );
  EXPECT_EQ( t[2], 2.0 );

  /* without obstacles d_obs is the width + height sentinel */
  auto const open = parse_grid_map( "S..\n..G\n", 0.0 );
  rollout one;
  one.cells = { open.start() };
  EXPECT_EQ( signals_from_rollout( open, one ).signal( "d_obs" )[0], 5.0 );
  EXPECT_THROW( signals_from_rollout( open, rollout{} ), std::invalid_argument );
}

TEST( gridworld_specs, robustness_examples )
{
  auto const env = sample_env();
  auto const specs = grid_specs( env );
  ASSERT_EQ( specs.size(), 3u );

  rollout hit;
  hit.cells = { { 0, 0 }, { 0, 1 }, { 1, 1 } };
  auto const tr_hit = signals_from_rollout( env, hit );
  EXPECT_EQ( stl::robustness( *specs[0].formula, tr_hit ), -1.0 );
  EXPECT_EQ( stl::robustness( *specs[1].formula, tr_hit ), 1.0 - 6.0 );

  rollout reach;
  reach.cells = { { 0, 0 }, { 0, 1 }, { 0, 2 }, { 0, 3 }, { 0, 4 }, { 1, 4 }, { 2, 4 }, { 3, 4 }, { 4, 4 } };
  auto const tr_reach = signals_from_rollout( env, reach );
  EXPECT_EQ( stl::robustness( *specs[0].formula, tr_reach ), 0.0 );
  EXPECT_EQ( stl::robustness( *specs[1].formula, tr_reach ), 1.0 );
  /* t starts at 0 so the timing spec always holds with margin t_goal */
  EXPECT_EQ( stl::robustness( *specs[2].formula, tr_reach ), 8.0 );
  EXPECT_EQ( stl::robustness( *specs[2].formula, tr_hit ), 8.0 );
}

TEST( gridworld_specs, obstacle_spec_matches_direct_minimum )
{
  auto const env = sample_env();
  auto const specs = grid_specs( env );
  std::mt19937_64 rng( 11 );
  auto const walk = []( cell, auto& r ) { return all_actions[std::uniform_int_distribution<std::size_t>( 0, 3 )( r )]; };
  for ( int k = 0; k < 500; ++k )
  {
    auto const path = run_episode( env, walk, rng, env.step_cap() );
    int nearest = 100;
    for ( auto c : path.cells )
      for ( auto o : env.obstacles() )
        nearest = std::min( nearest, manhattan( c, o ) );
    auto const rho = stl::robustness( *specs[0].formula, signals_from_rollout( env, path ) );
    ASSERT_EQ( rho, nearest - 1.0 );
    ASSERT_EQ( rho < 0.0, path.terminal == terminal_kind::obstacle );
  }
}

TEST( gridworld_demos, synthesis )
{
  auto const env = sample_env();
  auto const demos = synth_demos( env, 6, 2, 7 );
  ASSERT_EQ( demos.size(), 8u );
  for ( std::size_t i = 0; i < demos.size(); ++i )
  {
    auto const& d = demos[i];
    ASSERT_EQ( d.path.cells.size(), d.path.actions.size() + 1 );
    EXPECT_EQ( d.path.cells.front(), env.start() );
    EXPECT_EQ( d.demo.trace.length(), d.path.cells.size() );
    if ( i < 6 )
    {
      EXPECT_EQ( d.demo.metadata.at( "kind" ), "good" );
      EXPECT_EQ( d.path.terminal, terminal_kind::goal );
      for ( auto c : d.path.cells )
        EXPECT_FALSE( env.is_obstacle( c ) );
    }
    else
    {
      EXPECT_EQ( d.demo.metadata.at( "kind" ), "bad" );
    }
  }
  /* the first bad demo heads for the nearest obstacle */
  EXPECT_EQ( demos[6].path.terminal, terminal_kind::obstacle );

  auto const again = synth_demos( env, 6, 2, 7 );
  for ( std::size_t i = 0; i < demos.size(); ++i )
    EXPECT_EQ( grid_demo_to_json( demos[i] ).dump(), grid_demo_to_json( again[i] ).dump() );

  auto const doc = grid_demo_to_json( demos[0] );
  EXPECT_EQ( doc.at( "actions" ).get<std::string>().size(), demos[0].path.actions.size() );
  EXPECT_EQ( doc.at( "cells" ).size(), demos[0].path.cells.size() );
}

TEST( gridworld_rewards, good_demos_outscore_bad_ones )
{
  auto const env = sample_env();
  for ( std::uint64_t seed : { 1u, 7u, 19u } )
  {
    auto const p = learn_rewards( env, 6, 2, seed );
    auto const scores = cumulative_scores( p.z, p.w ).scores;
    double worst_good = 1e9, best_bad = -1e9;
    for ( std::size_t i = 0; i < p.demos.size(); ++i )
    {
      if ( p.demos[i].demo.metadata.at( "kind" ) == "good" )
        worst_good = std::min( worst_good, scores[i] );
      else if ( p.demos[i].path.terminal != terminal_kind::goal )
        best_bad = std::max( best_bad, scores[i] );
    }
    EXPECT_GT( worst_good, best_bad ) << "seed " << seed;

    EXPECT_EQ( p.rewards( env.goal() ), 1.0 );
    for ( auto o : env.obstacles() )
      EXPECT_EQ( p.rewards( o ), -1.0 );
    for ( std::size_t s = 0; s < env.num_states(); ++s )
    {
      auto const c = env.at( s );
      if ( !env.is_terminal( c ) )
      {
        EXPECT_GE( p.rewards( c ), -0.1 );
        EXPECT_LE( p.rewards( c ), 1.0 );
      }
    }
  }
}

TEST( gridworld_rewards, transition_reward_shaping )
{
  auto const env = sample_env();
  reward_table r{ 5, 5, std::vector<double>( 25, 0.5 ) };
  r( env.goal() ) = 1.0;
  /* ordinary step: -step_cost + gamma * 0.5 - 0.5 */
  EXPECT_DOUBLE_EQ( transition_reward( env, r, { 0, 0 }, { 0, 1 }, 0.8, 0.1 ), -0.1 + 0.4 - 0.5 );
  /* terminal cells carry zero potential */
  EXPECT_DOUBLE_EQ( transition_reward( env, r, { 3, 4 }, env.goal(), 0.8, 0.1 ), 1.0 - 0.5 );
  EXPECT_DOUBLE_EQ( transition_reward( env, r, { 0, 1 }, { 1, 1 }, 0.8, 0.1 ), -1.0 - 0.5 );
}

TEST( gridworld_learning, hyper_validation )
{
  auto const env = sample_env();
  reward_table const r{ 5, 5, std::vector<double>( 25, 0.0 ) };
  q_hyper h;
  h.gamma = 1.0;
  EXPECT_THROW( double_q_learn( env, r, h ), std::invalid_argument );
  h = {};
  h.alpha = 0.0;
  EXPECT_THROW( double_q_learn( env, r, h ), std::invalid_argument );
  h = {};
  h.episodes = 0;
  EXPECT_THROW( double_q_learn( env, r, h ), std::invalid_argument );
  h = {};
  h.step_cost = -1.0;
  EXPECT_THROW( double_q_learn( env, r, h ), std::invalid_argument );
}

TEST( gridworld_learning, deterministic_grid_converges )
{
  auto const env = sample_env( 0.0 );
  auto const p = learn_rewards( env, 6, 0, 3 );
  q_hyper h;
  h.episodes = 5000;
  h.seed = 3;
  auto const q = double_q_learn( env, p.rewards, h );
  EXPECT_GE( evaluate_policy( env, q, 100, 3 ), 0.95 );

  /* same seed, same tables */
  auto const again = double_q_learn( env, p.rewards, h );
  EXPECT_EQ( q.a, again.a );
  EXPECT_EQ( q.b, again.b );
}

TEST( gridworld_learning, learned_policy_against_exact_oracle )
{
  auto const env = sample_env( 0.2 );
  auto const p = learn_rewards( env, 6, 2, 7 );
  q_hyper h;
  h.episodes = 20000;
  h.seed = 7;
  auto const policy = greedy_policy( double_q_learn( env, p.rewards, h ) );

  auto const exact = reach_probability( env, policy, env.step_cap() );
  auto const ceiling = reach_probability( env, {}, env.step_cap() );
  EXPECT_LE( exact, ceiling + 1e-12 );
  EXPECT_GT( exact, 0.5 );

  /* the Monte Carlo estimate lies within 3 sigma of the exact value */
  std::size_t const trials = 2000;
  auto const estimate = evaluate_policy( env, policy, trials, 99 );
  auto const sigma = std::sqrt( exact * ( 1.0 - exact ) / trials );
  EXPECT_NEAR( estimate, exact, 3.0 * sigma + 1e-9 );
}

TEST( gridworld_evaluation, fixed_policies )
{
  auto const env = sample_env( 0.0 );
  std::vector<action> const always_up( env.num_states(), action::up );
  EXPECT_EQ( evaluate_policy( env, always_up, 10, 1 ), 0.0 );
  EXPECT_THROW( evaluate_policy( env, always_up, 0, 1 ), std::invalid_argument );
  EXPECT_THROW( evaluate_policy( env, std::vector<action>( 3, action::up ), 1, 1 ), std::invalid_argument );

  /* the BFS descent policy succeeds surely without slip and matches the oracle with slip */
  cell const goal[] = { env.goal() };
  auto const dist = bfs_distances( env, goal );
  std::vector<action> descent;
  for ( std::size_t s = 0; s < env.num_states(); ++s )
    descent.push_back( descend( env, dist, env.at( s ) ) );
  EXPECT_EQ( evaluate_policy( env, descent, 20, 1 ), 1.0 );
  EXPECT_DOUBLE_EQ( reach_probability( env, descent, env.step_cap() ), 1.0 );

  auto const slippery = env.with_slip( 0.2 );
  auto const exact = reach_probability( slippery, descent, slippery.step_cap() );
  auto const estimate = evaluate_policy( slippery, descent, 4000, 5 );
  EXPECT_NEAR( estimate, exact, 3.0 * std::sqrt( exact * ( 1.0 - exact ) / 4000 ) );
  EXPECT_EQ( evaluate_policy( slippery, descent, 300, 5 ), evaluate_policy( slippery, descent, 300, 5 ) );
}

TEST( gridworld_export, policy_csv_round_trip )
{
  auto const env = sample_env();
  std::mt19937_64 rng( 4 );
  std::vector<action> policy;
  for ( std::size_t s = 0; s < env.num_states(); ++s )
    policy.push_back( all_actions[rng() % 4] );
  auto const text = format_policy_csv( env, policy );
  auto const back = parse_policy_csv( env, "# header\n" + text );
  for ( std::size_t s = 0; s < env.num_states(); ++s )
  {
    if ( !env.is_terminal( env.at( s ) ) )
    {
      EXPECT_EQ( back[s], policy[s] );
    }
  }
  EXPECT_EQ( format_policy_csv( env, back ), text );
  EXPECT_THROW( parse_policy_csv( env, "U,U\n" ), input_error );
  EXPECT_THROW( parse_policy_csv( env, "X,U,U,U,U\nU,#,U,U,U\nU,U,U,#,U\nU,#,U,U,U\nU,U,U,U,G\n" ), input_error );

  reward_table r{ 2, 1, { 0.5, -1.0 } };
  EXPECT_EQ( format_reward_csv( r ), "0.5,-1\n" );
}
