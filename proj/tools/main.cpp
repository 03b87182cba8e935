#include "mprox/cli.hpp"

int main(int argc, char** argv) { return mprox::cli::run_main(argc, argv); }
