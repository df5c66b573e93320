#include "fmhom/cli.hpp"

int main(int argc, char** argv) { return fmhom::run_cli(argc, argv); }
