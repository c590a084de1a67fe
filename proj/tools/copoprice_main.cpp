#include "copoprice/cli.hpp"

int main(int argc, char** argv) { return copoprice::run_cli(argc, argv); }
