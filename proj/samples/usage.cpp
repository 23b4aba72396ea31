#include <iostream>

#include "unistoch/unistoch.hpp"

using namespace unistoch;

int main() {
    const SquaredModuliMatrix toy3{{1.0 / 3, 1.0 / 2, 1.0 / 6}, {1.0 / 4, 2.0 / 5, 7.0 / 20}, {5.0 / 12, 1.0 / 10, 29.0 / 60}};

    const SeparationVerdict v = test_unistochastic(toy3);
    std::cout << "physical: " << std::boolalpha << v.physical << "\n";
    std::cout << "cos delta: " << v.designated.real() << "\n";

    const Reconstruction r = reconstruct(toy3);
    std::cout << "unitary:\n" << r.unitary << "\n";
    std::cout << "defect: " << unitarity_defect(r.unitary) << "\n";

    for (const Orthogonality id : kAllOrthogonalities) {
        const TriangleGeometry g = triangle_geometry(toy3, id);
        std::cout << to_string(id) << ": R_c = " << g.sides.rc.real() << ", R_t = " << g.sides.rt.real()
                  << ", apex = (" << g.apex.rho << ", " << g.apex.eta << ")\n";
    }

    const SquaredModuliMatrix cyclic{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    try {
        reconstruct(cyclic);
    } catch (const ReconstructionRefused& e) {
        std::cout << "refused: " << e.verdict().diagnostics.front() << "\n";
    }
}
