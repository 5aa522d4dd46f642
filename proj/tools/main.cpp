#include "dreg/cli.hpp"

int main(int argc, char** argv) { return dreg::cli_main(argc, argv); }
