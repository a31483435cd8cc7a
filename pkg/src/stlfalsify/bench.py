"""Built-in demonstration systems so the toolbox runs out of the box.

Both benchmarks are small ODE models chosen to be hand-analyzable, so tests
can anchor on closed-form values: a damped oscillator whose safety bound is
violated exactly when the initial amplitude exceeds it, and a planar
predator-prey-style system with a region-avoidance requirement that only
certain initial conditions violate.  Each benchmark bundles a system, ready
to run default options, and a default requirement, and is addressable by
name from the command line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .runner import Options, SignalOptions, StlSpecification
from .stl import PredicateMap
from .sut import OdeSystem

__all__ = ["BenchmarkSystem", "oscillator", "nonlinear2d", "BENCHMARKS", "get_benchmark"]


@dataclass(frozen=True)
class BenchmarkSystem:
    """A named system with default options and default requirement."""

    name: str
    system: OdeSystem
    options: Options
    formula: str
    predicates: PredicateMap

    def specification(self) -> StlSpecification:
        return StlSpecification(self.formula, self.predicates)


def oscillator() -> BenchmarkSystem:
    """Damped oscillator with a forcing input.

    Dynamics: dx1/dt = x2, dx2/dt = -x1 - 0.1*x2 + u.  The search chooses
    the initial position x1(0) in [0, 1.2] (x2(0) = 0) and a 4-point
    piecewise-constant forcing u in [-0.2, 0.2] over (0, 20) seconds.  The
    requirement "[] p1" with p1 = (x1 <= 1.0) fails exactly when the
    position ever exceeds 1; with weak forcing that needs x1(0) near or
    above 1, so roughly one sixth of the initial range is violating.
    """

    def derivative(t, state, inputs):
        x1, x2 = state
        (u,) = inputs
        return (x2, -x1 - 0.1 * x2 + u)

    system = OdeSystem(
        derivative,
        initial_state=lambda static: (static[0], 0.0),
        step=0.05,
    )
    options = Options(
        static_params=((0.0, 1.2),),
        signals=(
            SignalOptions(
                bound=(-0.2, 0.2),
                control_points=4,
                interpolator="piecewise-constant",
            ),
        ),
        iterations=100,
        runs=1,
        interval=(0.0, 20.0),
        seed=0,
    )
    predicates = PredicateMap(("x1", "x2"))
    predicates.add("p1", (1.0, 0.0), 1.0)
    return BenchmarkSystem(
        name="oscillator",
        system=system,
        options=options,
        formula="[] p1",
        predicates=predicates,
    )


def nonlinear2d() -> BenchmarkSystem:
    """Planar predator-prey-style system with a region-avoidance requirement.

    Dynamics: dx1/dt = x1 - x1*x2, dx2/dt = x1*x2 - x2.  Orbits are closed
    curves around the equilibrium (1, 1); large orbits swing through the
    corner region x1 >= 2.7 and x2 >= 2.7, small ones never reach it.  The
    search chooses the initial state in [0, 2]^2; the requirement
    "[] !(p1 /\\ p2)" forbids entering the corner.  About 5% of the initial
    box is violating: points near the corner, plus thin strips along the
    axes whose orbits swing far out.  Random search finds a counterexample
    reliably within a couple hundred evaluations.
    """

    def derivative(t, state, inputs):
        x1, x2 = state
        return (x1 - x1 * x2, x1 * x2 - x2)

    system = OdeSystem(derivative, step=0.05)
    options = Options(
        static_params=((0.0, 2.0), (0.0, 2.0)),
        iterations=200,
        runs=1,
        interval=(0.0, 12.0),
        seed=0,
    )
    predicates = PredicateMap(("x1", "x2"))
    predicates.add("p1", (-1.0, 0.0), -2.7)
    predicates.add("p2", (0.0, -1.0), -2.7)
    return BenchmarkSystem(
        name="nonlinear2d",
        system=system,
        options=options,
        formula="[] !(p1 /\\ p2)",
        predicates=predicates,
    )


BENCHMARKS = {
    "oscillator": oscillator,
    "nonlinear2d": nonlinear2d,
}


def get_benchmark(name: str) -> BenchmarkSystem:
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ValidationError(
            f"unknown benchmark {name!r}; choose one of {sorted(BENCHMARKS)}"
        ) from None
    return factory()
