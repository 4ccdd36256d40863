#include "slda/cli.hpp"

int main(int argc, char** argv) { return slda::cli::main(argc, argv); }
