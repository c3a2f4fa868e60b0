#pragma once

// CLI subcommand dispatch. Filled in as modules land.

#include <cstdio>

namespace personagen::cli {

inline int run(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::fprintf(stderr, "personagen: not yet wired\n");
    return 2;
}

}  // namespace personagen::cli
