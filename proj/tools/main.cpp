#include "rkreco/cli.hpp"

int main(int argc, char** argv) { return rkreco::run_cli(argc, argv); }
