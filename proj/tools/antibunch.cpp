#include "antibunch/cli.hpp"

int main(int argc, char** argv) { return antibunch::cli::run_cli(argc, argv); }
