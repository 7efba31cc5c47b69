#include "rrbias/cli.hpp"

int main(int argc, char** argv) { return rrbias::cli_dispatch(argc, argv); }
