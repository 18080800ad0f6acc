#include "frsum/cli.hpp"

int main(int argc, char** argv) { return frsum::run_cli(argc, argv); }
