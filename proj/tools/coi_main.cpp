#include "coi/cli.hpp"

int main(int argc, char** argv) { return coi::cli::run(argc, argv); }
