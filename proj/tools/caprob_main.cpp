#include "caprob/cli.h"

#include <iostream>

int main(int argc, char** argv) { return caprob::cli_main(argc, argv, std::cout, std::cerr); }
