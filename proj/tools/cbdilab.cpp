// SPDX-License-Identifier: Apache-2.0
#include "cbdi/cli_run.hpp"

int main(int argc, char** argv) { return cbdi::run_cli(argc, argv); }
