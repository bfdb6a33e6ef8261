#include "cli.hpp"

int main(int argc, char** argv) { return smcgen::cli::run(argc, argv); }
