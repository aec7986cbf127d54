#include "entrobound/cli.hpp"

int main(int argc, char** argv) { return entrobound::cli::main(argc, argv); }
