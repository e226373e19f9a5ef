#include <iostream>

#include "dynamo/cli.hpp"

int main(int argc, char** argv) { return dynamo::run_cli(argc, argv, std::cout, std::cerr); }
