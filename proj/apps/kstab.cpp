#include "kstab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return kstab::dispatch(argc, argv, std::cout, std::cerr); }
