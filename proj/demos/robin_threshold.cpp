/// Sweep the Robin coefficient on a straight strip and watch the global
/// eigenvalue change sign. The transverse problem -phi'' = a^2 phi with
/// phi'(+-1) + gamma phi(+-1) = 0 has its smallest root at a tan a = gamma,
/// so with the potential +1 the eigenvalue a^2 - 1 crosses zero exactly at
/// gamma = tan 1 ~= 1.5574.

#include <cstdio>

#include <obleig/domain.hpp>
#include <obleig/eigensolver.hpp>
#include <obleig/fields.hpp>
#include <obleig/operators.hpp>

int main() {
  using namespace obleig;
  Domain strip = Domain::strip(1.0, 1, 0.0, 2);
  std::vector<double> radii{4, 6, 8};

  std::printf("%8s  %12s  %12s  %12s  %12s\n", "gamma", "lambda(r=4)", "lambda(r=6)",
              "lambda(r=8)", "extrapolated");
  for (double gamma : {0.5, 1.0, 1.5574077, 2.0}) {
    EllipticOperator L;
    L.form = EllipticOperator::Form::selfadjoint_divergence;
    L.A = MatrixField::isotropic(1.0);
    L.c = ScalarField::constant(1.0);
    ObliqueBoundary B = ObliqueBoundary::robin(gamma);

    SweepResult s = truncation_sweep(strip, L, B, {0, 0}, radii, 0.1);
    std::printf("%8.4f  %12.6f  %12.6f  %12.6f  %12.6f\n", gamma, s.points[0].lambda,
                s.points[1].lambda, s.points[2].lambda, s.extrapolated);
  }
  std::printf("\nthe sign of the limit flips between gamma = 1.5574 and gamma = 2:\n"
              "below tan 1 the strip is stabilised by the potential, above it the\n"
              "boundary drain wins.\n");
  return 0;
}
