#include "hepsel/cli.hpp"

int main(int argc, char ** argv) { return hepsel::cli::run(argc, argv); }
