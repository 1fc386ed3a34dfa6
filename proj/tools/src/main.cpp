#include <iostream>

#include "typomerge_cli/cli.hpp"

int main(int argc, char** argv) { return typomerge::cli::run(argc, argv, std::cout, std::cerr); }
