#include "setinf/cli.hpp"

int main(int argc, char** argv) { return setinf::run_cli(argc, argv); }
