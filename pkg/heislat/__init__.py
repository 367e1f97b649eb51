"""
heislat: Lattice Point Counting in the 3D Heisenberg Group

Monte Carlo and exact tools for counting primitive points of random
Heisenberg lattices inside plates and cylinder stacks, and for checking the
mean, variance and tail statements against Haar-random samples.

Main Classes:
- HeisLattice: lattice Gamma_{g,v} of the Heisenberg group
- HaarSampler: seeded Haar-random Euclidean and Heisenberg lattices
- Plate, CylinderStack: measurable sets in the Heisenberg group
- ExperimentConfig, ExperimentReport: Monte Carlo experiment inputs and outputs

Main Functions:
- nil_theta, heis_count: primitive point counts in plates and stacks
- canonicalize, orbit_count_bruteforce: SL(2,Z) orbits of primitive pairs
- cor_exact, cor_numeric: pair correlation of the fiber indicator
- run_acceptance_suite: the full acceptance grid
"""

from .core import AutElement, HPoint, HIntPoint, h_add, aut_act, aut_compose, is_primitive
from .lattice_space import (
    ACCEPTANCE_RATE,
    HaarSampler,
    HeisLattice,
    Lattice2,
    sample_euclidean,
    sample_heisenberg,
)
from .regions import (
    Annulus,
    CylinderStack,
    DisjointUnion,
    Disk,
    Plate,
    Rectangle,
    measure2,
    measure3,
    region_from_spec,
    slice_by_fraction,
)
from .counting import heis_count, nil_theta, nil_theta_direct, theta_count_stack, theta_euclidean
from .orbits import PrimPair, OrbitClass, canonicalize, orbit_count_bruteforce, same_orbit
from .correlation import cor_antipodal, cor_direct, cor_exact, cor_numeric
from .statistical_tests import ZETA2
from .experiments import DEFAULT_SEED, EXPERIMENTS, ExperimentConfig, ExperimentReport
from .evaluation import run_acceptance_suite, print_acceptance_report
from .utils import (
    ConfigError,
    DomainError,
    EnumerationBudgetError,
    InvariantViolation,
    PreconditionError,
)

__version__ = "0.1.0"
__author__ = "heislat developers"

__all__ = [
    # Group and lattices
    'HPoint',
    'HIntPoint',
    'AutElement',
    'h_add',
    'aut_act',
    'aut_compose',
    'is_primitive',
    'Lattice2',
    'HeisLattice',
    'HaarSampler',
    'sample_euclidean',
    'sample_heisenberg',

    # Regions
    'Rectangle',
    'Disk',
    'Annulus',
    'DisjointUnion',
    'Plate',
    'CylinderStack',
    'measure2',
    'measure3',
    'region_from_spec',
    'slice_by_fraction',

    # Counting
    'theta_euclidean',
    'nil_theta',
    'nil_theta_direct',
    'theta_count_stack',
    'heis_count',

    # Orbits and correlations
    'PrimPair',
    'OrbitClass',
    'canonicalize',
    'same_orbit',
    'orbit_count_bruteforce',
    'cor_exact',
    'cor_antipodal',
    'cor_direct',
    'cor_numeric',

    # Experiments
    'ExperimentConfig',
    'ExperimentReport',
    'EXPERIMENTS',
    'run_acceptance_suite',
    'print_acceptance_report',

    # Errors
    'DomainError',
    'PreconditionError',
    'ConfigError',
    'EnumerationBudgetError',
    'InvariantViolation',

    # Constants
    'ZETA2',
    'DEFAULT_SEED',
    'ACCEPTANCE_RATE',
]
