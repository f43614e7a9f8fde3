#include "spinloop/cli.hpp"

int main(int argc, char** argv) { return spinloop::run_cli(argc, argv); }
