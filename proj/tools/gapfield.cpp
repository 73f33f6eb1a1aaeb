#include "gapfield/cli.hpp"

int main(int argc, char** argv) { return gapfield::run_cli(argc, argv); }
