// SPDX-License-Identifier: Apache-2.0
#include "dse/cli.hpp"

int main(int argc, char** argv) { return dse::cli_main(argc, argv); }
