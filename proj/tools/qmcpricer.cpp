#include "qmc/cli.hpp"

int main(int argc, char** argv) { return qmc::cli::run_main(argc, argv); }
