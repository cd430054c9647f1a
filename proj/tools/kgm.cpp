#include "kgm/cli.hpp"

int main(int argc, char** argv) { return kgm::cli::main(argc, argv); }
