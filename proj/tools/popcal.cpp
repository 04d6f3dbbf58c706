#include "popcal/cli/commands.hpp"

int main(int argc, char** argv) { return popcal::cli::main(argc, argv); }
