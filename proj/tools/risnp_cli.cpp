// SPDX-License-Identifier: Apache-2.0

#include <risnp/cli.hpp>

int main(int argc, char **argv) { return risnp::run_cli(argc, argv); }
