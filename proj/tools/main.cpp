#include "reachplan/cli.hpp"

int main(int argc, char** argv) { return reachplan::cli_main(argc, argv); }
