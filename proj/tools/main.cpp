#include "cli.hpp"

int main(int argc, char** argv) { return exmo::run_cli(argc, argv); }
