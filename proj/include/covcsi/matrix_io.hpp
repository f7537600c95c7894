// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "covcsi/common.hpp"

namespace covcsi::io {

// Text format shared by covariance and pilot files: one header line,
// then one line per matrix row with whitespace-separated "re,im" cells.
void save_complex_matrix(const std::string& path, const MatrixXcd& m, const std::string& header);

// Reads the format above; the header line is returned through *header.
// The matrix shape is inferred from the body.
MatrixXcd load_complex_matrix(const std::string& path, std::string* header);

} // namespace covcsi::io
