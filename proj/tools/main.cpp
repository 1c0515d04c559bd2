#include "csqn/cli.hpp"

int main(int argc, char** argv) { return csqn::run_cli(argc, argv); }
