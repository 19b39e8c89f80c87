#include "freebnd/cli.hpp"

int main(int argc, char** argv) { return freebnd::cli::main(argc, argv); }
