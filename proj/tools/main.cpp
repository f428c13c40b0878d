#include "cli.hpp"

int main(int argc, char** argv) { return cab::cli_main(argc, argv); }
