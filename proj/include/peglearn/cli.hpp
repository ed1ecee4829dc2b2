#pragma once

// `peglearn` command-line driver. Exit codes: 0 success, 1 usage error,
// 2 invalid input, 3 internal invariant violation.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <peglearn/baselines.hpp>
#include <peglearn/combinatorics.hpp>
#include <peglearn/demo.hpp>
#include <peglearn/error.hpp>
#include <peglearn/gridworld.hpp>
#include <peglearn/peglearn.hpp>
#include <peglearn/stl.hpp>

namespace peglearn::cli
{

inline constexpr char const* version = "0.1.0";

enum exit_code : int
{
  ok = 0,
  usage = 1,
  invalid_input = 2,
  invariant_violation = 3,
};

using ordered_json = nlohmann::ordered_json;

/* Written into every artifact so reruns can be traced back to their inputs. */
struct provenance
{
  std::string subcommand;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;

  std::string line() const
  {
    return std::string( "peglearn " ) + version + " subcommand=" + subcommand +
           " seed=" + ( seed ? std::to_string( *seed ) : std::string( "none" ) ) +
           " epsilon=" + ( epsilon ? io::format_double( *epsilon ) : std::string( "none" ) );
  }

  ordered_json json() const
  {
    ordered_json j;
    j["tool"] = "peglearn";
    j["version"] = version;
    j["subcommand"] = subcommand;
    j["seed"] = seed ? ordered_json( *seed ) : ordered_json( nullptr );
    j["epsilon"] = epsilon ? ordered_json( *epsilon ) : ordered_json( nullptr );
    return j;
  }
};

/******************************************************************************
 * Small file formats
 ******************************************************************************/

struct table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column( std::string const& name ) const
  {
    auto it = std::find( header.begin(), header.end(), name );
    if ( it == header.end() )
      return std::nullopt;
    return static_cast<std::size_t>( it - header.begin() );
  }
};

/* Generic CSV with a header row; `#` lines are skipped. */
inline table parse_table( std::string const& text )
{
  table t;
  std::istringstream in( text );
  std::string line;
  while ( std::getline( in, line ) )
  {
    if ( !line.empty() && line.back() == '\r' )
      line.pop_back();
    if ( line.empty() || line.front() == '#' )
      continue;
    auto cells = io::split_csv_line( line );
    if ( t.header.empty() )
      t.header = std::move( cells );
    else
    {
      if ( cells.size() != t.header.size() )
        throw input_error( "CSV row width differs from header" );
      t.rows.push_back( std::move( cells ) );
    }
  }
  if ( t.header.empty() )
    throw input_error( "CSV has no header" );
  return t;
}

struct named_ranks
{
  std::vector<std::string> specs;
  rank_vector ranks;
};

/* Any CSV with a `rank` column (and optionally `spec`). */
inline named_ranks load_rank_csv( std::filesystem::path const& path )
{
  auto const t = parse_table( io::read_file( path ) );
  auto const rank_col = t.column( "rank" );
  if ( !rank_col )
    throw input_error( path.string() + ": no 'rank' column" );
  auto const spec_col = t.column( "spec" );
  named_ranks out;
  for ( auto const& row : t.rows )
  {
    auto const v = io::parse_double( row[*rank_col] );
    if ( !v || *v != std::floor( *v ) )
      throw input_error( path.string() + ": rank '" + row[*rank_col] + "' is not an integer" );
    out.ranks.push_back( static_cast<int>( *v ) );
    out.specs.push_back( spec_col ? row[*spec_col] : std::to_string( out.specs.size() + 1 ) );
  }
  if ( out.ranks.empty() )
    throw input_error( path.string() + ": no ranks" );
  return out;
}

inline std::string format_rank_csv( std::vector<std::string> const& specs, rank_vector const& ranks, provenance const& p )
{
  std::string out = "# " + p.line() + "\nspec,rank\n";
  for ( std::size_t j = 0; j < ranks.size(); ++j )
    out += specs[j] + "," + std::to_string( ranks[j] ) + "\n";
  return out;
}

inline std::string format_weights_csv( std::vector<std::string> const& specs, weight_vector const& w, provenance const& p )
{
  auto const ranks = ordering_from_weights( w );
  std::string out = "# " + p.line() + "\nspec,weight,rank\n";
  for ( std::size_t j = 0; j < specs.size(); ++j )
    out += specs[j] + "," + io::format_double( w.values[j] ) + "," + std::to_string( ranks[j] ) + "\n";
  return out;
}

/* Weights in spec order of `spec_names`; treated as softmax-normalized when not all in [1, n]. */
inline weight_vector load_weights_csv( std::filesystem::path const& path, std::vector<std::string> const& spec_names )
{
  auto const t = parse_table( io::read_file( path ) );
  auto const spec_col = t.column( "spec" ), weight_col = t.column( "weight" );
  if ( !spec_col || !weight_col )
    throw input_error( path.string() + ": weights CSV needs 'spec' and 'weight' columns" );
  std::map<std::string, double> by_name;
  for ( auto const& row : t.rows )
  {
    auto const v = io::parse_double( row[*weight_col] );
    if ( !v )
      throw input_error( path.string() + ": non-numeric weight '" + row[*weight_col] + "'" );
    by_name[row[*spec_col]] = *v;
  }
  weight_vector w;
  for ( auto const& s : spec_names )
  {
    auto it = by_name.find( s );
    if ( it == by_name.end() )
      throw input_error( path.string() + ": no weight for spec '" + s + "'" );
    w.values.push_back( it->second );
  }
  auto const n = static_cast<double>( w.values.size() );
  w.softmax = !std::all_of( w.values.begin(), w.values.end(), [n]( double v ) { return v >= 1.0 && v <= n; } );
  return w;
}

inline void emit( std::string const& path, std::string const& content, std::ostream& out )
{
  if ( path.empty() || path == "-" )
    out << content;
  else
    io::write_file( path, content );
}

inline std::vector<std::filesystem::path> expand_inputs( std::vector<std::string> const& inputs )
{
  std::vector<std::filesystem::path> files;
  for ( auto const& in : inputs )
  {
    std::filesystem::path p( in );
    if ( std::filesystem::is_directory( p ) )
    {
      std::vector<std::filesystem::path> found;
      for ( auto const& e : std::filesystem::directory_iterator( p ) )
        if ( e.is_regular_file() && e.path().extension() == ".json" )
          found.push_back( e.path() );
      std::sort( found.begin(), found.end() );
      files.insert( files.end(), found.begin(), found.end() );
    }
    else
      files.push_back( p );
  }
  return files;
}

inline std::vector<std::string> names_of( std::vector<std::size_t> const& idx, std::vector<std::string> const& names )
{
  std::vector<std::string> out;
  for ( auto i : idx )
    out.push_back( names[i] );
  return out;
}

inline ordered_json edges_json( performance_dag const& dag, std::vector<std::string> const& names )
{
  auto edges = ordered_json::array();
  for ( std::size_t i = 0; i < dag.size(); ++i )
    for ( std::size_t j = 0; j < dag.size(); ++j )
      if ( dag.has_edge( i, j ) )
        edges.push_back( ordered_json{ { "from", names[i] }, { "to", names[j] }, { "weight", dag( i, j ) } } );
  return edges;
}

/******************************************************************************
 * Subcommands
 ******************************************************************************/

struct eval_args
{
  std::vector<std::string> traces;
  std::string specs;
  std::optional<double> scale;
  std::string out;
};

inline int run_eval( eval_args const& a, std::ostream& out, std::ostream& log )
{
  auto const specs = parse_spec_text( io::read_file( a.specs ) );
  std::vector<demonstration> demos;
  for ( auto const& f : expand_inputs( a.traces ) )
    demos.push_back( load_trajectory( f ) );
  log << "eval: " << demos.size() << " demonstrations, " << specs.size() << " specifications\n";
  auto const z = build_rating_matrix( demos, specs, a.scale );

  provenance const p{ "eval", std::nullopt, std::nullopt };
  std::vector<std::string> comments{ p.line() };
  if ( !z.normalization_scales.empty() )
  {
    std::string s = "normalization=tanh scales=";
    for ( std::size_t j = 0; j < z.normalization_scales.size(); ++j )
      s += ( j ? ";" : "" ) + io::format_double( z.normalization_scales[j] );
    comments.push_back( s );
  }
  emit( a.out, format_rating_csv( z, comments ), out );
  return ok;
}

struct learn_args
{
  std::string ratings;
  double epsilon = default_epsilon;
  std::optional<double> local_epsilon;
  std::optional<double> global_epsilon;
  bool softmax = false;
  std::string dot;
  std::string weights;
  std::string graph;
  std::string fixture = "peglearn_cycle_counterexample.csv";
};

inline int run_learn( learn_args const& a, std::ostream& out, std::ostream& log )
{
  auto const raw = load_rating_matrix_csv( a.ratings );
  auto const z = rescale_to_unit( raw );
  peglearn_options const opts{ a.local_epsilon.value_or( a.epsilon ), a.global_epsilon.value_or( a.epsilon ) };
  log << "learn: " << z.rows() << "x" << z.cols() << " ratings, local epsilon " << opts.local_epsilon
      << ", global epsilon " << opts.global_epsilon << ( raw.scale_bounds ? ", Likert rescaled to [-1, 1]" : "" ) << "\n";

  auto const result = learn_performance_graph( z, opts );
  provenance const p{ "learn", std::nullopt, a.epsilon };
  auto const& names = z.spec_names();
  auto const w = spec_weights( result.dag, a.softmax );
  auto const order = topological_order( result.dag );

  if ( !a.dot.empty() )
    io::write_file( a.dot, export_dot( result.dag, names, p.line() ) );
  if ( !a.weights.empty() )
    io::write_file( a.weights, format_weights_csv( names, w, p ) );
  if ( !a.graph.empty() )
  {
    auto doc = graph_to_json( result.dag, names );
    doc["provenance"] = p.json();
    io::write_file( a.graph, doc.dump( 2 ) + "\n" );
  }

  ordered_json report;
  report["provenance"] = p.json();
  report["specs"] = names;
  report["weights"] = w.values;
  report["ranks"] = ordering_from_weights( w );
  report["topological_order"] = names_of( order, names );
  report["edges"] = edges_json( result.dag, names );
  report["cycle_repairs"] = result.repairs.size();
  out << report.dump( 2 ) << "\n";

  if ( !result.repairs.empty() )
  {
    warn_repairs( result.repairs, log );
    io::write_file( a.fixture, format_rating_csv( raw, { p.line(), "counterexample: cycle survived reduction" } ) );
    log << "error: reduced graph contained a cycle; counterexample written to " << a.fixture << "\n";
    return invariant_violation;
  }
  return ok;
}

struct rank_args
{
  std::string ratings;
  std::string weights;
  std::string graph;
  bool softmax = false;
  std::string out;
};

inline int run_rank( rank_args const& a, std::ostream& out, std::ostream& log )
{
  auto const z = rescale_to_unit( load_rating_matrix_csv( a.ratings ) );
  weight_vector w;
  if ( !a.graph.empty() )
  {
    auto const g = graph_from_json( nlohmann::json::parse( io::read_file( a.graph ) ) );
    if ( g.names != z.spec_names() )
      throw input_error( "graph nodes do not match the rating matrix specs" );
    w = spec_weights( g.dag, a.softmax );
  }
  else if ( !a.weights.empty() )
    w = load_weights_csv( a.weights, z.spec_names() );
  else
    throw input_error( "rank needs --weights or --graph" );
  log << "rank: " << z.rows() << " demonstrations\n";

  auto const r = cumulative_scores( z, w );
  std::vector<int> position( r.order.size() );
  for ( std::size_t k = 0; k < r.order.size(); ++k )
    position[r.order[k]] = static_cast<int>( k + 1 );

  provenance const p{ "rank", std::nullopt, std::nullopt };
  std::string csv = "# " + p.line() + "\ndemo_id,score,rank\n";
  for ( auto i : r.order )
    csv += z.demo_ids()[i] + "," + io::format_double( r.scores[i] ) + "," + std::to_string( position[i] ) + "\n";
  emit( a.out, csv, out );
  return ok;
}

struct baseline_args
{
  std::string ratings;
  std::string method = "kmsvm";
  std::uint64_t seed = 0;
  int levels = 3;
  std::size_t k = 2;
  bool all_points = false;
  std::string reference;
  std::string out;
  std::string report;
};

inline int run_baseline( baseline_args const& a, std::ostream& out, std::ostream& log )
{
  auto const z = rescale_to_unit( load_rating_matrix_csv( a.ratings ) );
  log << "baseline: method " << a.method << ", seed " << a.seed << "\n";
  rank_vector ranks;
  ordered_json details;
  if ( a.method == "kmsvm" )
  {
    baselines::kmsvm_options opts;
    opts.k = a.k;
    opts.train_on_all_points = a.all_points;
    auto const res = baselines::kmsvm_ordering_detailed( z, a.seed, opts );
    ranks = res.ranks;
    details["k"] = a.k;
    details["inertia"] = res.clusters.inertia;
    details["svm_weights"] = res.model.weights;
    details["svm_bias"] = res.model.bias;
  }
  else if ( a.method == "random" )
  {
    ranks = baselines::random_ordering( z.cols(), a.levels, a.seed );
    details["levels"] = a.levels;
  }
  else
    throw input_error( "unknown baseline method '" + a.method + "' (expected kmsvm or random)" );

  provenance const p{ "baseline", a.seed, std::nullopt };
  emit( a.out, format_rank_csv( z.spec_names(), ranks, p ), out );

  ordered_json report;
  report["provenance"] = p.json();
  report["method"] = a.method;
  report["seed"] = a.seed;
  report["specs"] = z.spec_names();
  report["ranks"] = ranks;
  report["details"] = details;
  if ( !a.reference.empty() )
  {
    auto const ref = load_rank_csv( a.reference );
    report["hamming_vs_reference"] = baselines::hamming_distance( ranks, ref.ranks );
  }
  if ( !a.report.empty() )
    io::write_file( a.report, report.dump( 2 ) + "\n" );
  else if ( !a.out.empty() && a.out != "-" )
    out << report.dump( 2 ) << "\n";
  return ok;
}

struct compare_args
{
  std::string a;
  std::string b;
  std::string out;
};

inline int run_compare( compare_args const& a, std::ostream& out, std::ostream& )
{
  auto const ra = load_rank_csv( a.a );
  auto const rb = load_rank_csv( a.b );
  if ( ra.specs != rb.specs )
    throw input_error( "rank files list different specifications" );
  provenance const p{ "compare", std::nullopt, std::nullopt };
  ordered_json report;
  report["provenance"] = p.json();
  report["specs"] = ra.specs;
  report["a"] = ra.ranks;
  report["b"] = rb.ranks;
  report["hamming"] = baselines::hamming_distance( ra.ranks, rb.ranks );
  emit( a.out, report.dump( 2 ) + "\n", out );
  return ok;
}

struct count_args
{
  int n = 3;
  bool enumerate = false;
  std::string out;
};

inline ordered_json big_json( combinatorics::big_int const& v )
{
  if ( v <= std::numeric_limits<std::int64_t>::max() )
    return ordered_json( v.convert_to<std::int64_t>() );
  return ordered_json( v.str() );
}

inline ordered_json report_json( combinatorics::count_report const& r )
{
  ordered_json j;
  j["formula_value"] = big_json( r.formula_value );
  j["enumerated_value"] = r.enumerated_value ? big_json( *r.enumerated_value ) : ordered_json( nullptr );
  j["agree"] = r.enumerated_value ? ordered_json( r.agree() ) : ordered_json( nullptr );
  return j;
}

inline int run_count( count_args const& a, std::ostream& out, std::ostream& log )
{
  using namespace combinatorics;
  if ( a.n < 1 )
    throw input_error( "--n must be >= 1" );
  bool const dag_enum = a.enumerate && a.n <= max_dag_enumeration_n;
  bool const ord_enum = a.enumerate && a.n <= max_ordering_enumeration_n;
  if ( a.enumerate && !dag_enum )
    log << "count: n = " << a.n << " exceeds the DAG enumeration limit (" << max_dag_enumeration_n << ")\n";

  auto const dags = digraph_report( a.n, dag_enum );
  auto const orderings = ordering_report( a.n, ord_enum );

  ordered_json j;
  j["provenance"] = provenance{ "count", std::nullopt, std::nullopt }.json();
  j["n"] = a.n;
  auto const dj = report_json( dags );
  for ( auto it = dj.begin(); it != dj.end(); ++it )
    j[it.key()] = it.value();
  auto oj = report_json( orderings );
  oj["weak_orders_enumerated"] = ord_enum ? big_json( weak_order_count_enumerate( a.n ) ) : ordered_json( nullptr );
  j["orderings"] = oj;
  emit( a.out, j.dump( 2 ) + "\n", out );
  return ok;
}

struct grid_args
{
  std::string map;
  double slip = 0.2;
  std::string demos = "6,2";
  std::uint64_t seed = 0;
  std::size_t episodes = 20000;
  std::size_t trials = 100;
  double epsilon = default_epsilon;
  double scale = 1.0;
  double gamma = 0.8;
  double alpha = 0.1;
  std::string out_dir;
  std::string report;
  std::string rewards;
  std::string policy;
  std::string dot;
};

inline std::pair<std::size_t, std::size_t> parse_demo_counts( std::string const& s )
{
  auto const comma = s.find( ',' );
  auto const good = io::parse_double( s.substr( 0, comma ) );
  auto const bad = comma == std::string::npos ? std::optional<double>( 0.0 ) : io::parse_double( s.substr( comma + 1 ) );
  if ( !good || !bad || *good < 0 || *bad < 0 || *good != std::floor( *good ) || *bad != std::floor( *bad ) )
    throw input_error( "--demos expects '<good>,<bad>'" );
  return { static_cast<std::size_t>( *good ), static_cast<std::size_t>( *bad ) };
}

inline grid::grid_env load_env( grid_args const& a )
{
  return grid::parse_grid_map( io::read_file( a.map ), a.slip );
}

inline std::string grid_spec_text( grid::grid_env const& env )
{
  std::string out;
  for ( auto const& s : grid::grid_specs( env ) )
    out += s.name + ": " + stl::to_string( *s.formula ) + "\n";
  return out;
}

inline int run_grid_gen( grid_args const& a, std::ostream&, std::ostream& log )
{
  auto const env = load_env( a );
  auto const [good, bad] = parse_demo_counts( a.demos );
  if ( a.out_dir.empty() )
    throw input_error( "grid gen-demos needs --out-dir" );
  log << "grid gen-demos: " << good << " good, " << bad << " bad, seed " << a.seed << "\n";
  auto const demos = grid::synth_demos( env, good, bad, a.seed );
  provenance const p{ "grid gen-demos", a.seed, std::nullopt };
  std::filesystem::path const dir( a.out_dir );
  for ( auto const& d : demos )
  {
    auto doc = grid::grid_demo_to_json( d );
    doc["provenance"] = p.json();
    io::write_file( dir / ( d.demo.id + ".json" ), doc.dump( 2 ) + "\n" );
  }
  io::write_file( dir / "specs.txt", "# " + p.line() + "\n" + grid_spec_text( env ) );
  log << demos.size() << " demonstrations written to " << a.out_dir << "\n";
  return ok;
}

inline int run_grid_run( grid_args const& a, std::ostream& out, std::ostream& log )
{
  auto const env = load_env( a );
  auto const [good, bad] = parse_demo_counts( a.demos );
  log << "grid run: map " << a.map << ", slip " << a.slip << ", demos " << good << "+" << bad << ", episodes "
      << a.episodes << ", trials " << a.trials << ", seed " << a.seed << ", epsilon " << a.epsilon << "\n";

  auto const demos = grid::synth_demos( env, good, bad, a.seed );
  std::vector<demonstration> plain;
  std::vector<grid::rollout> paths;
  for ( auto const& d : demos )
  {
    plain.push_back( d.demo );
    paths.push_back( d.path );
  }
  auto const specs = grid::grid_specs( env );
  auto const z = build_rating_matrix( plain, specs, a.scale );
  auto const learned = learn_performance_graph( z, { a.epsilon, a.epsilon } );
  auto const w = spec_weights( learned.dag );
  auto const rewards = grid::infer_state_rewards( env, paths, z, w );

  grid::q_hyper h;
  h.gamma = a.gamma;
  h.alpha = a.alpha;
  h.episodes = a.episodes;
  h.seed = a.seed;
  auto const q = grid::double_q_learn( env, rewards, h );
  auto const policy = grid::greedy_policy( q );
  auto const success = grid::evaluate_policy( env, policy, a.trials, a.seed );

  provenance const p{ "grid run", a.seed, a.epsilon };
  if ( !a.rewards.empty() )
    io::write_file( a.rewards, "# " + p.line() + "\n" + grid::format_reward_csv( rewards ) );
  if ( !a.policy.empty() )
    io::write_file( a.policy, "# " + p.line() + "\n" + grid::format_policy_csv( env, policy ) );
  if ( !a.dot.empty() )
    io::write_file( a.dot, export_dot( learned.dag, specs.names(), p.line() ) );

  ordered_json report;
  report["provenance"] = p.json();
  report["map"] = grid::format_grid_map( env );
  report["slip"] = a.slip;
  report["t_goal"] = grid::bfs_shortest_path_len( env );
  report["specs"] = specs.names();
  auto ratings = ordered_json::array();
  for ( std::size_t i = 0; i < z.rows(); ++i )
    ratings.push_back( ordered_json{ { "demo", z.demo_ids()[i] },
                                     { "terminal", grid::to_string( paths[i].terminal ) },
                                     { "ratings", std::vector<double>( z.row( i ).begin(), z.row( i ).end() ) } } );
  report["demonstrations"] = ratings;
  report["edges"] = edges_json( learned.dag, specs.names() );
  report["weights"] = w.values;
  report["episodes"] = a.episodes;
  report["gamma"] = a.gamma;
  report["alpha"] = a.alpha;
  report["trials"] = a.trials;
  report["success_rate"] = success;
  emit( a.report, report.dump( 2 ) + "\n", out );
  log << "grid run: success rate " << success << "\n";
  return learned.repairs.empty() ? ok : invariant_violation;
}

inline int run_grid_eval( grid_args const& a, std::ostream& out, std::ostream& log )
{
  auto const env = load_env( a );
  if ( a.policy.empty() )
    throw input_error( "grid eval needs --policy" );
  auto const policy = grid::parse_policy_csv( env, io::read_file( a.policy ) );
  log << "grid eval: " << a.trials << " trials, slip " << a.slip << ", seed " << a.seed << "\n";
  auto const success = grid::evaluate_policy( env, policy, a.trials, a.seed );
  ordered_json report;
  report["provenance"] = provenance{ "grid eval", a.seed, std::nullopt }.json();
  report["slip"] = a.slip;
  report["trials"] = a.trials;
  report["success_rate"] = success;
  emit( a.report, report.dump( 2 ) + "\n", out );
  return ok;
}

/******************************************************************************
 * Entry point
 ******************************************************************************/

inline int run( int argc, char const* const* argv, std::ostream& out = std::cout, std::ostream& log = std::cerr )
{
  CLI::App app{ "Learn performance graphs over task specifications from demonstrations", "peglearn" };
  app.require_subcommand( 1 );
  app.set_version_flag( "--version", version );

  eval_args ev;
  auto* eval = app.add_subcommand( "eval", "Evaluate traces against STL specs into a rating matrix" );
  eval->add_option( "--traces", ev.traces, "Trace JSON files or directories" )->required();
  eval->add_option( "--specs", ev.specs, "Spec file with 'name: formula' lines" )->required();
  eval->add_option( "--scale", ev.scale, "tanh normalization scale" )->check( CLI::PositiveNumber );
  eval->add_option( "--out", ev.out, "Rating CSV (default stdout)" );

  learn_args ln;
  auto* learn = app.add_subcommand( "learn", "Learn the performance DAG and specification weights" );
  learn->add_option( "--ratings", ln.ratings, "Rating CSV" )->required();
  learn->add_option( "--epsilon", ln.epsilon, "Edge threshold" )->capture_default_str()->check( CLI::NonNegativeNumber );
  learn->add_option( "--local-epsilon", ln.local_epsilon, "Threshold for per-demo graphs" )->check( CLI::NonNegativeNumber );
  learn->add_option( "--global-epsilon", ln.global_epsilon, "Threshold for the reduced graph" )->check( CLI::NonNegativeNumber );
  learn->add_flag( "--softmax", ln.softmax, "Softmax-normalize weights" );
  learn->add_option( "--dot", ln.dot, "Graphviz output" );
  learn->add_option( "--weights", ln.weights, "Weights CSV output" );
  learn->add_option( "--graph", ln.graph, "Adjacency JSON output" );
  learn->add_option( "--fixture-out", ln.fixture, "Where to dump a cycle counterexample" )->capture_default_str();

  rank_args rk;
  auto* rank = app.add_subcommand( "rank", "Score and rank demonstrations" );
  rank->add_option( "--ratings", rk.ratings, "Rating CSV" )->required();
  rank->add_option( "--weights", rk.weights, "Weights CSV" );
  rank->add_option( "--graph", rk.graph, "Adjacency JSON (weights derived from it)" );
  rank->add_flag( "--softmax", rk.softmax, "Softmax-normalize weights derived from --graph" );
  rank->add_option( "--out", rk.out, "Ranking CSV (default stdout)" );

  baseline_args bl;
  auto* baseline = app.add_subcommand( "baseline", "Baseline specification orderings" );
  baseline->add_option( "--ratings", bl.ratings, "Rating CSV" )->required();
  baseline->add_option( "--method", bl.method, "kmsvm or random" )->capture_default_str()->check( CLI::IsMember( { "kmsvm", "random" } ) );
  baseline->add_option( "--seed", bl.seed, "Random seed" )->capture_default_str();
  baseline->add_option( "--levels", bl.levels, "Rank levels for random orderings" )->capture_default_str()->check( CLI::PositiveNumber );
  baseline->add_option( "--k", bl.k, "Number of k-means clusters" )->capture_default_str()->check( CLI::PositiveNumber );
  baseline->add_flag( "--svm-all-points", bl.all_points, "Train the SVM on all labeled rows" );
  baseline->add_option( "--reference", bl.reference, "Reference rank CSV for a Hamming comparison" );
  baseline->add_option( "--out", bl.out, "Rank CSV (default stdout)" );
  baseline->add_option( "--report", bl.report, "JSON report" );

  compare_args cp;
  auto* compare = app.add_subcommand( "compare", "Hamming distance between two rank CSVs" );
  compare->add_option( "--a", cp.a, "First rank CSV" )->required();
  compare->add_option( "--b", cp.b, "Second rank CSV" )->required();
  compare->add_option( "--out", cp.out, "JSON report (default stdout)" );

  count_args ct;
  auto* count = app.add_subcommand( "count", "Ordering and DAG search-space sizes" );
  count->add_option( "--n", ct.n, "Number of specifications" )->required()->check( CLI::PositiveNumber );
  count->add_flag( "--enumerate", ct.enumerate, "Cross-check by brute-force enumeration" );
  count->add_option( "--out", ct.out, "JSON report (default stdout)" );

  grid_args gr;
  auto* grid_cmd = app.add_subcommand( "grid", "Stochastic gridworld pipeline" );
  grid_cmd->require_subcommand( 1 );
  auto add_env = [&gr]( CLI::App* c ) {
    c->add_option( "--map", gr.map, "Grid map file" )->required();
    c->add_option( "--slip", gr.slip, "Slip probability" )->capture_default_str()->check( CLI::Range( 0.0, 0.8 ) );
    c->add_option( "--seed", gr.seed, "Random seed" )->capture_default_str();
  };
  auto* gen = grid_cmd->add_subcommand( "gen-demos", "Synthesize demonstrations" );
  add_env( gen );
  gen->add_option( "--demos", gr.demos, "good,bad counts" )->capture_default_str();
  gen->add_option( "--out-dir", gr.out_dir, "Output directory" )->required();

  auto* grun = grid_cmd->add_subcommand( "run", "Demos -> ratings -> DAG -> rewards -> double Q-learning -> evaluation" );
  add_env( grun );
  grun->add_option( "--demos", gr.demos, "good,bad counts" )->capture_default_str();
  grun->add_option( "--episodes", gr.episodes, "Q-learning episodes" )->capture_default_str()->check( CLI::PositiveNumber );
  grun->add_option( "--trials", gr.trials, "Evaluation trials" )->capture_default_str()->check( CLI::PositiveNumber );
  grun->add_option( "--epsilon", gr.epsilon, "Edge threshold" )->capture_default_str()->check( CLI::NonNegativeNumber );
  grun->add_option( "--scale", gr.scale, "tanh normalization scale" )->capture_default_str()->check( CLI::PositiveNumber );
  grun->add_option( "--gamma", gr.gamma, "Discount factor" )->capture_default_str();
  grun->add_option( "--alpha", gr.alpha, "Learning rate" )->capture_default_str();
  grun->add_option( "--report", gr.report, "JSON report (default stdout)" );
  grun->add_option( "--rewards", gr.rewards, "Reward heatmap CSV" );
  grun->add_option( "--policy", gr.policy, "Greedy policy CSV" );
  grun->add_option( "--dot", gr.dot, "Learned DAG as Graphviz" );

  auto* geval = grid_cmd->add_subcommand( "eval", "Evaluate a saved policy" );
  add_env( geval );
  geval->add_option( "--policy", gr.policy, "Policy CSV" )->required();
  geval->add_option( "--trials", gr.trials, "Evaluation trials" )->capture_default_str()->check( CLI::PositiveNumber );
  geval->add_option( "--report", gr.report, "JSON report (default stdout)" );

  try
  {
    app.parse( argc, argv );
  }
  catch ( CLI::ParseError const& e )
  {
    std::ostringstream msg, err;
    auto const code = app.exit( e, msg, err );
    out << msg.str();
    log << err.str();
    return code == 0 ? ok : usage;
  }

  try
  {
    if ( *eval )
      return run_eval( ev, out, log );
    if ( *learn )
      return run_learn( ln, out, log );
    if ( *rank )
      return run_rank( rk, out, log );
    if ( *baseline )
      return run_baseline( bl, out, log );
    if ( *compare )
      return run_compare( cp, out, log );
    if ( *count )
      return run_count( ct, out, log );
    if ( *gen )
      return run_grid_gen( gr, out, log );
    if ( *grun )
      return run_grid_run( gr, out, log );
    if ( *geval )
      return run_grid_eval( gr, out, log );
  }
  catch ( invariant_error const& e )
  {
    log << "internal error: " << e.what() << "\n";
    return invariant_violation;
  }
  catch ( nlohmann::json::exception const& e )
  {
    log << "error: " << e.what() << "\n";
    return invalid_input;
  }
  catch ( std::exception const& e )
  {
    log << "error: " << e.what() << "\n";
    return invalid_input;
  }
  return usage;
}

} // namespace peglearn::cli
