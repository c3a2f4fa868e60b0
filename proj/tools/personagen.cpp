#include <cstdio>

// Subcommand dispatch lives in cli.hpp so integration tests can drive the
// same entry points in-process.
#include "personagen/cli.hpp"

int main(int argc, char** argv) { return personagen::cli::run(argc, argv); }
