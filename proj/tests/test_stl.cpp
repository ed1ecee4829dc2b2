#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <peglearn/stl.hpp>

#include "support/naive_monitor.hpp"

using namespace peglearn;
using namespace peglearn::stl;

namespace
{

trace single( std::vector<double> x )
{
  return trace( { { "x", std::move( x ) } } );
}

} // namespace

TEST( stl_parse, always_predicate )
{
  auto const f = parse_formula( "G[0,10](d_obs >= 1)" );
  auto const* g = f->as<always>();
  ASSERT_NE( g, nullptr );
  EXPECT_EQ( g->window, ( interval{ 0, 10 } ) );
  auto const* p = g->child->as<predicate>();
  ASSERT_NE( p, nullptr );
  EXPECT_EQ( p->signal, "d_obs" );
  EXPECT_EQ( p->cmp, comparator::ge );
  EXPECT_EQ( p->threshold, 1.0 );
}

TEST( stl_parse, eventually_predicate )
{
  auto const f = parse_formula( "F[0,8](t <= 8)" );
  EXPECT_TRUE( structurally_equal( *f, *make_eventually( { 0, 8 }, make_pred( "t", comparator::le, 8 ) ) ) );
}

TEST( stl_parse, malformed_interval_is_rejected )
{
  EXPECT_THROW( parse_formula( "G[2,1](x > 0)" ), parse_error );
  try
  {
    parse_formula( "G[2,1](x > 0)" );
  }
  catch ( parse_error const& e )
  {
    EXPECT_EQ( e.line(), 1u );
    EXPECT_EQ( e.column(), 2u );
  }
}

TEST( stl_parse, aliases_and_precedence )
{
  auto const a = parse_formula( "alw[0,end](x > 0) and not ev[1,2](y < 1) or true" );
  auto const b = make_or( make_and( make_always( { 0, std::nullopt }, make_pred( "x", comparator::gt, 0 ) ),
                                    make_not( make_eventually( { 1, 2 }, make_pred( "y", comparator::lt, 1 ) ) ) ),
                          make_true() );
  EXPECT_TRUE( structurally_equal( *a, *b ) );

  auto const u = parse_formula( "x > 0 U[0,2] y > 0 & z < 1" );
  ASSERT_NE( u->as<conjunction>(), nullptr );
  EXPECT_NE( u->as<conjunction>()->lhs->as<until>(), nullptr );
}

TEST( stl_parse, keywords_need_an_interval )
{
  /* `G` without a window is an ordinary signal name */
  auto const f = parse_formula( "G > 2" );
  ASSERT_NE( f->as<predicate>(), nullptr );
  EXPECT_EQ( f->as<predicate>()->signal, "G" );
}

TEST( stl_parse, errors_carry_positions )
{
  for ( auto const* bad : { "", "x >", "x > 1 &", "G[0,1]", "G[0,x](y > 1)", "(x > 1", "x > 1)", "x ?? 1", "G[-1,2](x>1)" } )
    EXPECT_THROW( parse_formula( bad ), parse_error ) << bad;
}

TEST( stl_parse, round_trip_random_formulas )
{
  std::mt19937_64 rng( 11 );
  for ( int k = 0; k < 2000; ++k )
  {
    auto const f = naive::random_formula( rng, 4 );
    auto const text = to_string( *f );
    auto const g = parse_formula( text );
    ASSERT_TRUE( structurally_equal( *f, *g ) ) << text;
    EXPECT_EQ( to_string( *g ), text );
  }
}

TEST( stl_robustness, worked_examples )
{
  auto const x = single( { 3, 1, 2 } );
  EXPECT_EQ( robustness( *parse_formula( "G[0,2](x > 0)" ), x ), 1.0 );
  EXPECT_EQ( robustness( *parse_formula( "F[0,2](x >= 2.5)" ), x ), 0.5 );
  EXPECT_EQ( robustness( *parse_formula( "!(G[0,2](x > 0))" ), x ), -1.0 );

  /* margins a = [2, 2, 0] and b = [-1, -1, 3] */
  trace const ab( { { "a", { 2, 2, 0 } }, { "b", { -1, -1, 3 } } } );
  EXPECT_EQ( robustness( *parse_formula( "a > 0 U[0,2] b > 0" ), ab ), 2.0 );

  EXPECT_EQ( robustness( *parse_formula( "F[0,1](G[0,1](x >= 1))" ), single( { 0, 1, 2, 1 } ) ), 0.0 );
}

TEST( stl_robustness, boolean_satisfaction )
{
  auto const f = parse_formula( "G[0,2](x > 0)" );
  EXPECT_TRUE( boolean_sat( *f, single( { 3, 1, 2 } ) ) );
  EXPECT_FALSE( boolean_sat( *f, single( { 3, -1, 2 } ) ) );
  EXPECT_TRUE( boolean_sat( *make_true(), single( { 0 } ) ) );
  EXPECT_FALSE( boolean_sat( *make_false(), single( { 0 } ) ) );
}

TEST( stl_robustness, normalization )
{
  EXPECT_EQ( normalize_robustness( 0.0, 1.0 ), 0.0 );
  EXPECT_NEAR( normalize_robustness( -0.5, 1.0 ), -0.46211715726000974, 1e-15 );
  EXPECT_LT( normalize_robustness( 50.0, 1.0 ), 1.0 + 1e-15 );
  EXPECT_GT( normalize_robustness( 50.0, 1.0 ), 0.999 );
  EXPECT_THROW( normalize_robustness( 1.0, 0.0 ), std::invalid_argument );
  EXPECT_THROW( normalize_robustness( 1.0, -2.0 ), std::invalid_argument );
}

TEST( stl_robustness, evaluation_errors )
{
  auto const x = single( { 1, 2 } );
  EXPECT_THROW( robustness( *parse_formula( "y > 0" ), x ), eval_error );
  EXPECT_THROW( robustness( *parse_formula( "x > 0" ), x, 2 ), eval_error );
  EXPECT_THROW( robustness( *parse_formula( "G[3,4](x > 0)" ), x ), eval_error );
  /* a nested window falling off the end is vacuous, not an error */
  EXPECT_EQ( robustness( *parse_formula( "F[0,1](G[1,1](x > 0))" ), x ), std::numeric_limits<double>::infinity() );
}

TEST( stl_trace, shape_checks )
{
  using signal_map = std::map<std::string, std::vector<double>>;
  EXPECT_THROW( trace( signal_map{} ), input_error );
  EXPECT_THROW( trace( signal_map{ { "x", {} } } ), input_error );
  EXPECT_THROW( trace( { { "x", { 1, 2 } }, { "y", { 0 } } } ), input_error );
}

TEST( stl_builders, interval_preconditions )
{
  EXPECT_THROW( make_always( { 2, 1 }, make_true() ), std::invalid_argument );
  EXPECT_THROW( make_eventually( { -1, 1 }, make_true() ), std::invalid_argument );
  EXPECT_NO_THROW( make_until( { 0, std::nullopt }, make_true(), make_false() ) );
}

TEST( stl_properties, matches_naive_monitor )
{
  std::mt19937_64 rng( 2024 );
  int compared = 0;
  for ( int k = 0; k < 3000; ++k )
  {
    auto const f = naive::random_formula( rng, 4 );
    auto const tr = naive::random_trace( rng );
    auto const t = std::uniform_int_distribution<std::size_t>( 0, tr.length() - 1 )( rng );
    if ( naive::top_window_empty( *f, static_cast<long>( t ), static_cast<long>( tr.length() ) ) )
    {
      EXPECT_THROW( robustness( *f, tr, t ), eval_error );
      continue;
    }
    ASSERT_EQ( robustness( *f, tr, t ), naive::rho( *f, tr, static_cast<long>( t ) ) ) << to_string( *f );
    ++compared;
  }
  EXPECT_GT( compared, 2000 );
}

TEST( stl_properties, negation_and_duality )
{
  std::mt19937_64 rng( 5 );
  for ( int k = 0; k < 500; ++k )
  {
    auto const f = naive::random_formula( rng, 3 );
    auto const g = naive::random_formula( rng, 3 );
    auto const tr = naive::random_trace( rng );
    interval const iv{ 0, std::nullopt };
    auto const rf = robustness( *make_always( iv, f ), tr );
    EXPECT_EQ( robustness( *make_not( make_always( iv, f ) ), tr ), -rf );
    /* G phi == !F !phi */
    EXPECT_EQ( rf, robustness( *make_not( make_eventually( iv, make_not( f ) ) ), tr ) );
    /* a & b <= a | b */
    auto const rand_v = robustness( *make_always( iv, make_and( f, g ) ), tr );
    auto const ror_v = robustness( *make_always( iv, make_or( f, g ) ), tr );
    EXPECT_LE( rand_v, ror_v );
  }
}

TEST( stl_properties, robustness_sign_matches_satisfaction )
{
  std::mt19937_64 rng( 8 );
  for ( int k = 0; k < 500; ++k )
  {
    auto const tr = naive::random_trace( rng );
    auto const f = make_always( { 0, std::nullopt }, naive::random_formula( rng, 3 ) );
    EXPECT_EQ( boolean_sat( *f, tr ), robustness( *f, tr ) >= 0.0 );
  }
}

TEST( stl_printer, format )
{
  EXPECT_EQ( to_string( *parse_formula( "G[0,10](d_obs >= 1)" ) ), "G[0,10](d_obs >= 1)" );
  EXPECT_EQ( to_string( *parse_formula( "ev[2,end](x < -0.25)" ) ), "F[2,end](x < -0.25)" );
  EXPECT_EQ( signals_of( *parse_formula( "G[0,1](b > 0) & a < 2 | b > 1" ) ), ( std::vector<std::string>{ "a", "b" } ) );
  EXPECT_EQ( depth( *parse_formula( "x > 0" ) ), 1u );
  EXPECT_EQ( depth( *parse_formula( "!(G[0,1](x > 0))" ) ), 3u );
}
