"""Computable structure theory for 2-step nilsystems at desk scale.

Subpackages:

- ``heisenberg``: exact Heisenberg group arithmetic, fundamental-domain
  reduction, and the gauge distance on the nilmanifold.
- ``systems``: the Heisenberg nilsystem, torus rotations, orbits, and the
  projection to the maximal equicontinuous factor.
- ``cubes``: dynamical parallelograms and parallelepipeds, membership
  residuals, faces, euclidean permutations, and seven-vertex completion.
- ``proximality``: witness searches for the regionally proximal relations.
- ``nilsequence``: observables on the nilmanifold and sequence generation.
- ``regularity``: windowed arithmetic-regularity certification of bounded
  complex sequences, with a fast bitmask engine and a naive oracle.
- ``cli``: command-line front end.
"""

__version__ = "0.1.0"
