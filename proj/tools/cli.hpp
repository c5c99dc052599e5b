// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace halluprobe::cli {

/// Entry point of the `halluprobe` tool. Returns 0 on success, 1 on a data
/// error (one `error: <Name>: <message>` line on `err`), 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace halluprobe::cli
