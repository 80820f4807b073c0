// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return fvr::cli::run(argc, argv, std::cout, std::cerr); }
