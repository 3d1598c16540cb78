#include "signseq/cli.hpp"

int main(int argc, char** argv) { return signseq::cli::run(argc, argv); }
