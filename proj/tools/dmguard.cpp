#include "dmguard/cli.hpp"

int main(int argc, char** argv) { return dmguard::cli::run(argc, argv); }
