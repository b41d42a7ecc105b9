#include "cli.hpp"

int main(int argc, char** argv) { return d2stoch::cli::run(argc, argv); }
