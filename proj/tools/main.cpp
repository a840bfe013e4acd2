// SPDX-License-Identifier: Apache-2.0
#include "factscribe/cli.hpp"

int main(int argc, char** argv) { return factscribe::run(argc, argv); }
