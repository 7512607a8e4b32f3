#include "cli_app.hpp"

int
main(int argc, char** argv)
{
  return eivreg::cli::run(argc, argv);
}
