// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#include "vmatt/cli.hpp"

int main(int argc, char** argv) { return vmatt::cli_main(argc, argv); }
