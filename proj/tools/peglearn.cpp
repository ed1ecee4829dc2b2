#include <peglearn/cli.hpp>

int main( int argc, char** argv )
{
  return peglearn::cli::run( argc, argv );
}
