// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "covcsi/common.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::pilots {

/// Distinct DFT columns: p_k(l) = exp(j 2 pi k l / L). Unit-modulus
/// entries and Gram exactly L * I. Requires L >= num_users.
PilotSet gen_orthogonal(int L, int num_users);

/// Unit-modulus entries exp(j psi) with psi i.i.d. uniform in [0, 2 pi).
PilotSet gen_random_phase(int L, int num_users, Rng& rng);

/// P^dagger P.
MatrixXcd gram(const PilotSet& pilots);

/// Same dense complex text format as covariance files; header is
/// "L num_users model_tag".
void save_pilots(const std::string& path, const PilotSet& pilots);
PilotSet load_pilots(const std::string& path);

} // namespace covcsi::pilots
