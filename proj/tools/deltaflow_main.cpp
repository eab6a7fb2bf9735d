#include "deltaflow/cli.hpp"

int main(int argc, char** argv) { return deltaflow::run_cli(argc, argv); }
