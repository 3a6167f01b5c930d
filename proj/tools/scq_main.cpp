#include "scq/cli.hpp"

int main(int argc, char** argv) { return scq::cli::main(argc, argv); }
