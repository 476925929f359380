#include "certikit/cli.hpp"

int main(int argc, char** argv) { return certikit::cli::main(argc, argv); }
