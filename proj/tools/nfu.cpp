#include "nfu/cli.hpp"

int main(int argc, char** argv) { return nfu::cli::run(argc, argv); }
