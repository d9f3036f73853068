#include "survalid/cli.hpp"

int main(int argc, char** argv) { return survalid::cli::run(argc, argv); }
