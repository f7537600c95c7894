// SPDX-License-Identifier: Apache-2.0
#include "covcsi/pilots.hpp"

#include <cmath>
#include <sstream>

#include "covcsi/matrix_io.hpp"

namespace covcsi::pilots {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

PilotSet gen_orthogonal(int L, int num_users) {
    if (L < 1 || num_users < 1) throw std::domain_error("gen_orthogonal: L and num_users must be >= 1");
    if (L < num_users) throw std::domain_error("gen_orthogonal: orthogonality requires L >= num_users");
    PilotSet p;
    p.model = PilotModel::orthogonal_dft;
    p.matrix.resize(L, num_users);
    for (int k = 0; k < num_users; ++k)
        for (int ell = 0; ell < L; ++ell) {
            const double arg = kTwoPi * k * ell / L;
            p.matrix(ell, k) = cplx(std::cos(arg), std::sin(arg));
        }
    return p;
}

PilotSet gen_random_phase(int L, int num_users, Rng& rng) {
    if (L < 1 || num_users < 1) throw std::domain_error("gen_random_phase: L and num_users must be >= 1");
    PilotSet p;
    p.model = PilotModel::random_phase;
    p.seed = rng.key();
    p.matrix.resize(L, num_users);
    for (int k = 0; k < num_users; ++k)
        for (int ell = 0; ell < L; ++ell) p.matrix(ell, k) = rng.unit_phase();
    return p;
}

MatrixXcd gram(const PilotSet& pilots) { return pilots.matrix.adjoint() * pilots.matrix; }

void save_pilots(const std::string& path, const PilotSet& pilots) {
    std::ostringstream header;
    header << pilots.length() << ' ' << pilots.num_users() << ' ' << to_string(pilots.model);
    io::save_complex_matrix(path, pilots.matrix, header.str());
}

PilotSet load_pilots(const std::string& path) {
    std::string header;
    const MatrixXcd m = io::load_complex_matrix(path, &header);
    std::istringstream hs(header);
    int L = 0, n = 0;
    std::string tag;
    hs >> L >> n >> tag;
    if (L != m.rows() || n != m.cols())
        throw std::runtime_error("pilot file header inconsistent with matrix body");
    PilotSet p;
    p.matrix = m;
    p.model = PilotModel::explicit_matrix;
    if (tag == "orthogonal_dft") p.model = PilotModel::orthogonal_dft;
    else if (tag == "random_phase") p.model = PilotModel::random_phase;
    return p;
}

} // namespace covcsi::pilots
