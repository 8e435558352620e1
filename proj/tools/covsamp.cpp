#include "covsamp/cli.hpp"

int main(int argc, char** argv) { return covsamp::run_cli(argc, argv); }
