#include "lcs/cli.hpp"

int main(int argc, char** argv) { return lcs::bench::run_cli(argc, argv); }
