"""Built-in potentials used by tests, demos and the default configs."""

from .potential import parse_potential

BUILTINS = {
    "symmetric_double_well": ("0.1*(x^2-1)^2", 1, [(-2.5, 2.5)]),
    "quartic_double_well": ("(x^2-1)^2", 1, [(-2.5, 2.5)]),
    "asymmetric_double_well": ("x^4/4 - x^2/2 + 0.1*x", 1, [(-2.5, 2.5)]),
    "tilted_triple_well": ("0.02*((x+2.2)*(x+0.2)*(x-1.8))^2 + 0.01*x", 1, [(-2.9, 2.5)]),
    "double_well_2d": ("(x^2-1)^2 + 2*y^2", 2, [(-2.5, 2.5), (-2.0, 2.0)]),
    # four minima on the axes at radius 1, four saddles at value 1/3 on the diagonals
    "cross_2d": ("(x^2+y^2-1)^2 + 2*x^2*y^2", 2, [(-2.0, 2.0), (-2.0, 2.0)]),
    "single_well": ("x^2", 1, [(-2.0, 2.0)]),
}


def builtin(name):
    """A fresh :class:`~metastable.potential.Potential` for a built-in name."""
    source, dim, domain = BUILTINS[name]
    return parse_potential(source, dim, domain)
