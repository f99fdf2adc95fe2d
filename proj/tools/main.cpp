#include "cli.hpp"

int main(int argc, char** argv) { return spgadmm::cli::run(argc, argv); }
